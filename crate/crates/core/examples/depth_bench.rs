//! Cost and result of truncating the propagation at fixed depths.

use vgaball::pipeline::{bench_graph, build_visibility_graph, write_bench_csv};
use vgaball::synth::{town, TownParams};

fn main() -> vgaball::Result<()> {
    let t = town(&TownParams::square(150.0, 30, 4.0, 16.0), 21);
    let (graph, _) = build_visibility_graph(&t.boundary, &t.buildings, 2.0, Some(20.0), true)?;
    eprintln!("{} nodes", graph.node_count());
    let depths = [Some(1), Some(2), Some(3), Some(5), Some(8), Some(13), None];
    let rows = bench_graph(&graph, 10, &depths)?;
    write_bench_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
