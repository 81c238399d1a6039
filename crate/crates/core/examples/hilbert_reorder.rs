//! Hilbert-curve renumbering: effect on the gap stream, and identical metrics.

use vgaball::cgraph::hilbert_reorder;
use vgaball::metrics::write_csv;
use vgaball::pipeline::{analyze_graph, build_visibility_graph, Mode};
use vgaball::synth::{town, TownParams};

fn csv(graph: &vgaball::cgraph::CompressedCsr) -> vgaball::Result<Vec<u8>> {
    let mut out = Vec::new();
    write_csv(
        &analyze_graph(graph, Mode::HyperBall, 10, None)?.rows,
        &mut out,
    )?;
    Ok(out)
}

fn main() -> vgaball::Result<()> {
    let t = town(&TownParams::square(100.0, 20, 3.0, 12.0), 9);
    let (row_major, _) = build_visibility_graph(&t.boundary, &t.buildings, 2.0, Some(30.0), false)?;
    let hilbert = hilbert_reorder(&row_major)?;

    println!("row-major stream {} bytes", row_major.stream_len());
    println!("hilbert stream   {} bytes", hilbert.stream_len());
    let moved = (0..hilbert.node_count() as u32)
        .filter(|&v| hilbert.original_id(v) != v)
        .count();
    println!("{moved} of {} nodes renumbered", hilbert.node_count());
    println!(
        "metric tables identical: {}",
        csv(&row_major)? == csv(&hilbert)?
    );
    Ok(())
}
