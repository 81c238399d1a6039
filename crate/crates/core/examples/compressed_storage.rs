//! Compressed adjacency: size against a flat `u32` list, then a round trip
//! through the on-disk format, read back both into memory and by mapping.

use vgaball::cgraph::{load_vgacsr, save_vgacsr};
use vgaball::pipeline::build_visibility_graph;
use vgaball::synth::{town, TownParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = town(&TownParams::square(100.0, 20, 4.0, 12.0), 3);
    let (graph, _) = build_visibility_graph(&t.boundary, &t.buildings, 2.0, None, false)?;

    let flat = graph.flat_size();
    let packed = graph.stream_len();
    println!("flat u32 adjacency {flat} bytes");
    println!(
        "varint gap stream  {packed} bytes ({:.1}% of flat)",
        100.0 * packed as f64 / flat as f64
    );

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("town.vgacsr");
    save_vgacsr(&graph, &path)?;
    println!(
        "file               {} bytes",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0)
    );

    for mmap in [false, true] {
        let back = load_vgacsr(&path, mmap)?;
        back.validate()?;
        let same = (0..graph.node_count() as u32).all(|v| graph.neighbors(v).eq(back.neighbors(v)));
        println!(
            "reload (mmap={mmap:<5}) mapped={} identical={same}",
            back.stream().is_mapped()
        );
    }
    Ok(())
}
