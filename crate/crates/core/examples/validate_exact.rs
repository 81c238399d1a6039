//! HyperBall against exact all-source BFS on the same graph.

use vgaball::oracle::compare;
use vgaball::pipeline::{analyze_graph, build_visibility_graph, Mode};
use vgaball::synth::{town, TownParams};

fn main() -> vgaball::Result<()> {
    let t = town(&TownParams::square(70.0, 16, 2.0, 9.0), 5);
    let (graph, _) = build_visibility_graph(&t.boundary, &t.buildings, 1.0, Some(8.0), false)?;
    println!("{} nodes", graph.node_count());

    let exact = analyze_graph(&graph, Mode::Exact, 10, None)?;
    for p in [8, 10, 12] {
        let est = analyze_graph(&graph, Mode::HyperBall, p, None)?;
        let report = compare(&est.rows, &exact.rows)?;
        let md = report.get("visual_mean_depth").unwrap();
        let hh = report.get("integration_hh").unwrap();
        println!(
            "p={p:<2} mean depth r={:.4} median err {:.2}%  integration rho={:.4}",
            md.pearson_r,
            100.0 * md.median_rel_err,
            hh.spearman_rho
        );
    }
    Ok(())
}
