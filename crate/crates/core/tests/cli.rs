use std::path::Path;
use std::process::Command;

use vgaball::geometry::{polygons_to_geojson, Polygon};

fn vgaball(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vgaball"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_inputs(dir: &Path) -> (String, String) {
    let boundary = dir.join("boundary.geojson");
    let buildings = dir.join("buildings.geojson");
    std::fs::write(&boundary, polygons_to_geojson(&[Polygon::rect(0.0, 0.0, 40.0, 30.0)])).unwrap();
    std::fs::write(
        &buildings,
        polygons_to_geojson(&[Polygon::rect(8.0, 8.0, 16.0, 20.0), Polygon::rect(24.0, 4.0, 30.0, 12.0)]),
    )
    .unwrap();
    (boundary.display().to_string(), buildings.display().to_string())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_then_analyze_matches_direct_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let (boundary, buildings) = write_inputs(dir.path());
    let graph = dir.path().join("g.vgacsr");
    let cached = dir.path().join("cached.csv");
    let direct = dir.path().join("direct.csv");
    let common = ["--spacing", "2", "--radius", "15"];

    let out = vgaball(&[&["build-graph", "--boundary", &boundary, "--buildings", &buildings, "--graph", path_str(&graph)][..], &common].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = vgaball(&["analyze", "--graph", path_str(&graph), "--mmap", "--out", path_str(&cached)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = vgaball(&[&["analyze", "--boundary", &boundary, "--buildings", &buildings, "--out", path_str(&direct)][..], &common].concat());
    assert!(out.status.success());

    let a = std::fs::read(&cached).unwrap();
    assert_eq!(a, std::fs::read(&direct).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(vgaball::metrics::CSV_HEADER));
    // 20 x 15 cells less those covered by the two buildings
    assert_eq!(text.lines().count() - 1, 300 - 24 - 12);
}

#[test]
fn validate_and_bench_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (boundary, buildings) = write_inputs(dir.path());
    let report = dir.path().join("report.csv");
    let out = vgaball(&["validate", "--boundary", &boundary, "--buildings", &buildings, "--spacing", "2", "--out", path_str(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("metric,pearson_r,spearman_rho,median_rel_err,n"));
    assert!(text.contains("visual_mean_depth,"));

    let out = vgaball(&["bench", "--boundary", &boundary, "--buildings", &buildings, "--spacing", "2", "--depths", "1,2,unlimited"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], vgaball::pipeline::BENCH_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("unlimited,"));
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.geojson");
    std::fs::write(&bad, "{\"type\": \"FeatureCollection\", \"features\": [").unwrap();
    let g = dir.path().join("g.vgacsr");
    let out = vgaball(&["build-graph", "--boundary", path_str(&bad), "--graph", path_str(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    let (boundary, _) = write_inputs(dir.path());
    assert_eq!(vgaball(&["analyze", "--boundary", &boundary, "--precision", "3"]).status.code(), Some(2));
    assert_eq!(vgaball(&["analyze", "--boundary", &boundary, "--spacing", "-1"]).status.code(), Some(2));
    assert_eq!(vgaball(&["bench", "--boundary", &boundary, "--depths", "x"]).status.code(), Some(2));

    std::fs::write(&g, b"not a graph file at all").unwrap();
    assert_eq!(vgaball(&["analyze", "--graph", path_str(&g)]).status.code(), Some(2));
}
