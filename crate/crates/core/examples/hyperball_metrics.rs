//! Full metric table for a synthetic town from HyperBall depth estimates.
//!
//! `cargo run --release --example hyperball_metrics > metrics.csv`

use vgaball::metrics::write_csv;
use vgaball::pipeline::{analyze_graph, build_visibility_graph, Mode};
use vgaball::synth::{town, TownParams};

fn main() -> vgaball::Result<()> {
    let t = town(&TownParams::square(90.0, 18, 3.0, 10.0), 11);
    let (graph, _) = build_visibility_graph(&t.boundary, &t.buildings, 1.5, None, true)?;
    let analysis = analyze_graph(&graph, Mode::HyperBall, 10, None)?;
    eprintln!(
        "{} nodes, {} propagation steps, depth {:.3} s, metrics {:.3} s",
        graph.node_count(),
        analysis.iterations,
        analysis.depth_seconds,
        analysis.metrics_seconds
    );

    let best = analysis
        .rows
        .iter()
        .filter(|r| r.integration_hh.is_finite())
        .max_by(|a, b| a.integration_hh.total_cmp(&b.integration_hh))
        .unwrap();
    eprintln!(
        "most integrated point ({:.2}, {:.2}) HH {:.3} MD {:.3}",
        best.x, best.y, best.integration_hh, best.visual_mean_depth
    );

    write_csv(&analysis.rows, std::io::stdout().lock())?;
    Ok(())
}
