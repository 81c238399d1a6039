//! Builds the visibility graph of a small synthetic town and prints its size.
//!
//! `cargo run --release --example build_visibility [seed]`

use vgaball::pipeline::build_visibility_graph;
use vgaball::synth::{town, TownParams};

fn main() -> vgaball::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let t = town(&TownParams::square(120.0, 25, 4.0, 14.0), seed);
    let (graph, timings) =
        build_visibility_graph(&t.boundary, &t.buildings, 2.0, Some(40.0), false)?;

    println!("nodes          {}", graph.node_count());
    println!("directed edges {}", graph.edge_count());
    println!("components     {}", graph.components().count());
    println!("grid           {:.3} s", timings.grid);
    println!("visibility     {:.3} s", timings.visibility);

    let busiest = (0..graph.node_count() as u32)
        .max_by_key(|&v| graph.degree(v))
        .unwrap();
    let p = graph
        .grid()
        .spec
        .cell_center(graph.grid().cell_of_node[busiest as usize]);
    println!(
        "most visible point ({:.1}, {:.1}) sees {} others",
        p.x,
        p.y,
        graph.degree(busiest)
    );
    Ok(())
}
