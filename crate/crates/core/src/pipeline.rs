//! End-to-end driver behind the command-line tool.

use std::cell::RefCell;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::cgraph::{self, build_from_source, BuildOptions, CompressedCsr, GraphGrid};
use crate::error::{Result, VgaError};
use crate::geometry::{self, Polygon, Segment};
use crate::hll::HllParams;
use crate::hyperball;
use crate::metrics::{self, DepthSource, MetricRow};
use crate::oracle::{self, CompareReport};
use crate::sparksieve::{Sieve, SieveScratch, SweepParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    HyperBall,
    Exact,
}

impl std::str::FromStr for Mode {
    type Err = VgaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hyperball" => Ok(Self::HyperBall),
            "exact" => Ok(Self::Exact),
            _ => Err(VgaError::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub buildings: Option<PathBuf>,
    pub boundary: Option<PathBuf>,
    pub spacing: f64,
    /// Visibility radius in metres; `None` is unlimited.
    pub radius: Option<f64>,
    pub depth_limit: Option<u32>,
    pub precision: u32,
    pub mode: Mode,
    pub hilbert: bool,
    pub graph: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mmap: bool,
    /// Worker threads; `None` uses every logical core.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            buildings: None,
            boundary: None,
            spacing: 5.0,
            radius: None,
            depth_limit: None,
            precision: 10,
            mode: Mode::HyperBall,
            hilbert: false,
            graph: None,
            out: None,
            mmap: false,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        HllParams::new(self.precision)?;
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(VgaError::InvalidParameter(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) {
                return Err(VgaError::InvalidParameter(format!(
                    "radius must be positive, got {r}"
                )));
            }
        }
        if self.depth_limit == Some(0) {
            return Err(VgaError::InvalidParameter(
                "depth limit must be at least 1".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(VgaError::InvalidParameter(
                "thread count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn in_pool<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            b = b.num_threads(t);
        }
        let pool = b
            .build()
            .map_err(|e| VgaError::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(f)
    }
}

/// Wall-clock seconds per pipeline phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuildTimings {
    pub grid: f64,
    pub visibility: f64,
    pub reorder: f64,
}

/// Obstacles used for visibility: every building edge plus the boundary,
/// so sight lines cannot leave a non-convex study area.
pub fn obstacle_segments(boundary: &Polygon, buildings: &[Polygon]) -> Vec<Segment> {
    buildings
        .iter()
        .chain(std::iter::once(boundary))
        .flat_map(Polygon::edges)
        .collect()
}

/// Grid, visibility sweep and compression, all in memory.
pub fn build_visibility_graph(
    boundary: &Polygon,
    buildings: &[Polygon],
    spacing: f64,
    radius: Option<f64>,
    hilbert: bool,
) -> Result<(CompressedCsr, BuildTimings)> {
    let mut timings = BuildTimings::default();
    let t0 = Instant::now();
    let (grid, nodes) = geometry::generate_grid(boundary, buildings, spacing)?;
    let obstacles = geometry::rasterize_segments(obstacle_segments(boundary, buildings), &grid);
    timings.grid = t0.elapsed().as_secs_f64();
    log::info!(
        "grid: {}x{} cells, {} active, {} obstacle segments ({:.3} s)",
        grid.rows,
        grid.cols,
        nodes.len(),
        obstacles.segments().len(),
        timings.grid
    );

    let t1 = Instant::now();
    let params = SweepParams { radius };
    let sieve = Sieve::new(&grid, &nodes, &obstacles, params);
    thread_local! {
        static SCRATCH: RefCell<SieveScratch> = RefCell::new(SieveScratch::default());
    }
    let graph_grid = GraphGrid {
        spec: grid,
        cell_of_node: nodes.cells().to_vec(),
    };
    let mut graph = build_from_source(graph_grid, BuildOptions::default(), |v| {
        SCRATCH.with(|s| sieve.visible_cells_with(v, &mut s.borrow_mut()).to_vec())
    })?;
    timings.visibility = t1.elapsed().as_secs_f64();
    log::info!(
        "visibility: {} directed edges, {} stream bytes ({:.3} s)",
        graph.edge_count(),
        graph.stream_len(),
        timings.visibility
    );

    if hilbert {
        let t2 = Instant::now();
        graph = cgraph::hilbert_reorder(&graph)?;
        timings.reorder = t2.elapsed().as_secs_f64();
        log::info!("hilbert reorder ({:.3} s)", timings.reorder);
    }
    Ok((graph, timings))
}

fn load_inputs(cfg: &RunConfig) -> Result<(Polygon, Vec<Polygon>)> {
    let boundary_path = cfg.boundary.as_deref().ok_or_else(|| {
        VgaError::InvalidParameter("--boundary is required to build a graph".into())
    })?;
    let boundary = geometry::read_boundary(boundary_path)?;
    let buildings = match &cfg.buildings {
        Some(p) => geometry::read_polygons(p)?,
        None => Vec::new(),
    };
    Ok((boundary, buildings))
}

/// Graph from inputs when a boundary is given, otherwise from the cache file.
pub fn obtain_graph(cfg: &RunConfig) -> Result<CompressedCsr> {
    if cfg.boundary.is_some() {
        let (boundary, buildings) = load_inputs(cfg)?;
        let (g, _) =
            build_visibility_graph(&boundary, &buildings, cfg.spacing, cfg.radius, cfg.hilbert)?;
        return Ok(g);
    }
    let path = cfg.graph.as_deref().ok_or_else(|| {
        VgaError::InvalidParameter("either --boundary or --graph is required".into())
    })?;
    let g = cgraph::load_vgacsr(path, cfg.mmap)?;
    if cfg.hilbert && g.hilbert_inverse().is_none() {
        return cgraph::hilbert_reorder(&g);
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub path: PathBuf,
    pub nodes: usize,
    pub edges: u64,
    pub stream_bytes: u64,
    pub timings: BuildTimings,
    pub serialize_seconds: f64,
}

/// Builds the visibility graph and writes it to `--graph` (or `--out`).
pub fn cmd_build_graph(cfg: &RunConfig) -> Result<BuildReport> {
    cfg.validate()?;
    let path = cfg
        .graph
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| VgaError::InvalidParameter("--graph or --out is required".into()))?;
    let (boundary, buildings) = load_inputs(cfg)?;
    cfg.in_pool(|| {
        let (g, timings) =
            build_visibility_graph(&boundary, &buildings, cfg.spacing, cfg.radius, cfg.hilbert)?;
        let t = Instant::now();
        cgraph::save_vgacsr(&g, &path)?;
        let serialize_seconds = t.elapsed().as_secs_f64();
        log::info!("serialize: {} ({serialize_seconds:.3} s)", path.display());
        Ok(BuildReport {
            path: path.clone(),
            nodes: g.node_count(),
            edges: g.edge_count(),
            stream_bytes: g.stream_len(),
            timings,
            serialize_seconds,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub rows: Vec<MetricRow>,
    /// Propagation steps for HyperBall, deepest BFS level for exact mode.
    pub iterations: u32,
    pub converged: bool,
    pub depth_seconds: f64,
    pub metrics_seconds: f64,
}

/// Metrics for a graph in the requested mode.
pub fn analyze_graph(
    graph: &CompressedCsr,
    mode: Mode,
    precision: u32,
    depth_limit: Option<u32>,
) -> Result<Analysis> {
    let params = HllParams::new(precision)?;
    if graph.node_count() == 0 {
        return Err(VgaError::EmptyGraph);
    }
    let t0 = Instant::now();
    let (rows, iterations, converged, depth_seconds);
    match mode {
        Mode::HyperBall => {
            let state = hyperball::run(graph, params, depth_limit)?;
            depth_seconds = t0.elapsed().as_secs_f64();
            iterations = state.iterations();
            converged = state.converged;
            rows = metrics::metric_rows(graph, DepthSource::HyperBall(&state));
        }
        Mode::Exact => {
            let exact = oracle::exact_bfs_all(graph, depth_limit);
            depth_seconds = t0.elapsed().as_secs_f64();
            iterations = exact.max_depth() as u32;
            converged = depth_limit.is_none_or(|d| iterations < d);
            rows = metrics::metric_rows(graph, DepthSource::Exact(&exact));
        }
    }
    let metrics_seconds = t0.elapsed().as_secs_f64() - depth_seconds;
    log::info!("depth phase: {iterations} iterations ({depth_seconds:.3} s); metrics ({metrics_seconds:.3} s)");
    Ok(Analysis {
        rows,
        iterations,
        converged,
        depth_seconds,
        metrics_seconds,
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| VgaError::io(p, e))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Computes the metric table and writes it as CSV to `--out` (or stdout).
pub fn cmd_analyze(cfg: &RunConfig) -> Result<Analysis> {
    cfg.validate()?;
    cfg.in_pool(|| {
        let graph = obtain_graph(cfg)?;
        let analysis = analyze_graph(&graph, cfg.mode, cfg.precision, cfg.depth_limit)?;
        let out = open_output(cfg.out.as_deref())?;
        metrics::write_csv(&analysis.rows, out)?;
        Ok(analysis)
    })
}

/// Runs HyperBall and the exact oracle on the same graph and writes the
/// agreement report.
pub fn cmd_validate(cfg: &RunConfig) -> Result<CompareReport> {
    cfg.validate()?;
    cfg.in_pool(|| {
        let graph = obtain_graph(cfg)?;
        let est = analyze_graph(&graph, Mode::HyperBall, cfg.precision, cfg.depth_limit)?;
        let exact = analyze_graph(&graph, Mode::Exact, cfg.precision, cfg.depth_limit)?;
        let report = oracle::compare(&est.rows, &exact.rows)?;
        let mut out = open_output(cfg.out.as_deref())?;
        report.write_csv(&mut out)?;
        out.flush()?;
        Ok(report)
    })
}

pub const BENCH_HEADER: &str = "depth,iterations,bfs_seconds,mean_visual_mean_depth";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub depth: Option<u32>,
    pub iterations: u32,
    pub bfs_seconds: f64,
    /// Mean of the finite mean-depth values, a cheap accuracy proxy.
    pub mean_visual_mean_depth: f64,
}

pub fn bench_graph(
    graph: &CompressedCsr,
    precision: u32,
    depths: &[Option<u32>],
) -> Result<Vec<BenchRow>> {
    let params = HllParams::new(precision)?;
    depths
        .iter()
        .map(|&depth| {
            let t = Instant::now();
            let state = hyperball::run(graph, params, depth)?;
            let bfs_seconds = t.elapsed().as_secs_f64();
            let (sum, count) = (0..graph.node_count() as u32)
                .map(|v| {
                    let n_v = graph.component_size(v);
                    metrics::mean_depth(state.distance_sums(v, n_v).0, n_v)
                })
                .filter(|m| m.is_finite())
                .fold((0.0, 0usize), |(s, c), m| (s + m, c + 1));
            Ok(BenchRow {
                depth,
                iterations: state.iterations(),
                bfs_seconds,
                mean_visual_mean_depth: if count == 0 {
                    f64::NAN
                } else {
                    sum / count as f64
                },
            })
        })
        .collect()
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{BENCH_HEADER}")?;
    for r in rows {
        let depth = r.depth.map_or("unlimited".to_string(), |d| d.to_string());
        writeln!(
            out,
            "{depth},{},{:.3},{}",
            r.iterations,
            r.bfs_seconds,
            if r.mean_visual_mean_depth.is_nan() {
                "NaN".to_string()
            } else {
                r.mean_visual_mean_depth.to_string()
            }
        )?;
    }
    Ok(())
}

/// Times HyperBall over a sweep of depth limits.
pub fn cmd_bench(cfg: &RunConfig, depths: &[Option<u32>]) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    cfg.in_pool(|| {
        let graph = obtain_graph(cfg)?;
        let rows = bench_graph(&graph, cfg.precision, depths)?;
        let mut out = open_output(cfg.out.as_deref())?;
        write_bench_csv(&rows, &mut out)?;
        out.flush()?;
        Ok(rows)
    })
}

/// Parses a count or the word `unlimited`.
pub fn parse_limit<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, String> {
    if s.eq_ignore_ascii_case("unlimited") {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| format!("expected a number or \"unlimited\", got {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = RunConfig {
            precision: 20,
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(VgaError::PrecisionOutOfRange(20))
        ));
        let bad = RunConfig {
            spacing: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().unwrap_err().is_input_error());
    }

    #[test]
    fn limits_and_modes() {
        assert_eq!(parse_limit::<u32>("unlimited"), Ok(None));
        assert_eq!(parse_limit::<u32>("7"), Ok(Some(7)));
        assert_eq!(parse_limit::<f64>("12.5"), Ok(Some(12.5)));
        assert!(parse_limit::<u32>("x").is_err());
        assert_eq!("exact".parse::<Mode>().unwrap(), Mode::Exact);
        assert!("bfs".parse::<Mode>().is_err());
    }

    #[test]
    fn open_square_is_complete() {
        let boundary = Polygon::rect(0.0, 0.0, 20.0, 20.0);
        let (g, _) = build_visibility_graph(&boundary, &[], 5.0, None, false).unwrap();
        assert_eq!(g.node_count(), 16);
        assert_eq!(g.edge_count(), 16 * 15);
        let a = analyze_graph(&g, Mode::HyperBall, 10, None).unwrap();
        assert_eq!(a.iterations, 1);
        for r in &a.rows {
            assert!((r.visual_mean_depth - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn bench_iterations_follow_depth() {
        let adj: Vec<Vec<u32>> = (0..9u32)
            .map(|v| {
                [v.checked_sub(1), (v < 8).then_some(v + 1)]
                    .into_iter()
                    .flatten()
                    .collect()
            })
            .collect();
        let g = CompressedCsr::from_adjacency(&adj).unwrap();
        let rows = bench_graph(&g, 10, &[Some(3), Some(5), Some(10), None]).unwrap();
        let its: Vec<u32> = rows.iter().map(|r| r.iterations).collect();
        assert_eq!(its, vec![3, 5, 8, 8]);
        let mut buf = Vec::new();
        write_bench_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), BENCH_HEADER);
        assert!(text.lines().last().unwrap().starts_with("unlimited,8,"));
    }
}
