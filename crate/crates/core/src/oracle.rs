//! Exact reference computations used to validate the fast paths.
//!
//! Everything here works from plain adjacency lists or raw geometry and
//! shares no code with the sweep, the HLL counters, or the metric
//! derivation it checks.

use rayon::prelude::*;
use std::collections::HashMap;
use std::io::Write;

use crate::cgraph::CompressedCsr;
use crate::error::{Result, VgaError};
use crate::geometry::{GridSpec, NodeSet, Segment};
use crate::metrics::{MetricRow, METRIC_COLUMNS};
use crate::sparksieve::{within_radius, SweepParams};

/// Per-source BFS results.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub sum_d: Vec<u64>,
    pub sum_d2: Vec<u64>,
    /// `histograms[v][t]` = number of nodes at distance exactly `t` from `v`.
    pub histograms: Vec<Vec<u64>>,
    pub component_id: Vec<u32>,
    pub component_sizes: Vec<u32>,
}

impl ExactResult {
    pub fn node_count(&self) -> usize {
        self.sum_d.len()
    }

    /// `|B(v, t)|` for `t = 0..=ecc(v)`.
    pub fn neighbourhood_function(&self, v: u32) -> Vec<u64> {
        self.histograms[v as usize]
            .iter()
            .scan(0, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    }

    pub fn component_size(&self, v: u32) -> u32 {
        self.component_sizes[self.component_id[v as usize] as usize]
    }

    /// Largest distance seen from any source.
    pub fn max_depth(&self) -> usize {
        self.histograms
            .iter()
            .map(|h| h.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }
}

/// Flat CSR copy of an adjacency structure.
struct FlatAdj {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl FlatAdj {
    fn from_lists(adj: &[Vec<u32>]) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        for row in adj {
            targets.extend_from_slice(row);
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    fn row(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Component labels by flood fill, numbered in order of each component's
/// lowest node.
pub fn flood_fill_components(adj: &[Vec<u32>]) -> (Vec<u32>, Vec<u32>) {
    let mut label = vec![u32::MAX; adj.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for s in 0..adj.len() {
        if label[s] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        let mut size = 0;
        label[s] = id;
        stack.push(s as u32);
        while let Some(v) = stack.pop() {
            size += 1;
            for &w in &adj[v as usize] {
                if label[w as usize] == u32::MAX {
                    label[w as usize] = id;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    (label, sizes)
}

/// BFS from every node. Nodes farther than `depth_limit` are left out of
/// the sums and histograms.
pub fn exact_bfs_adjacency(adj: &[Vec<u32>], depth_limit: Option<u32>) -> ExactResult {
    let flat = FlatAdj::from_lists(adj);
    let n = flat.len();
    let limit = depth_limit.unwrap_or(u32::MAX);
    let per_source: Vec<(u64, u64, Vec<u64>)> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![u32::MAX; n], Vec::<u32>::new(), Vec::<u32>::new()),
            |(dist, frontier, next), s| {
                for d in dist.iter_mut() {
                    *d = u32::MAX;
                }
                frontier.clear();
                frontier.push(s as u32);
                dist[s] = 0;
                let mut hist = vec![1u64];
                let (mut sum, mut sum2) = (0u64, 0u64);
                let mut depth = 0u32;
                while !frontier.is_empty() && depth < limit {
                    depth += 1;
                    next.clear();
                    for &v in frontier.iter() {
                        for &w in flat.row(v as usize) {
                            if dist[w as usize] == u32::MAX {
                                dist[w as usize] = depth;
                                next.push(w);
                            }
                        }
                    }
                    if next.is_empty() {
                        break;
                    }
                    let c = next.len() as u64;
                    hist.push(c);
                    sum += u64::from(depth) * c;
                    sum2 += u64::from(depth) * u64::from(depth) * c;
                    std::mem::swap(frontier, next);
                }
                (sum, sum2, hist)
            },
        )
        .collect();
    let (component_id, component_sizes) = flood_fill_components(adj);
    let mut out = ExactResult {
        sum_d: Vec::with_capacity(n),
        sum_d2: Vec::with_capacity(n),
        histograms: Vec::with_capacity(n),
        component_id,
        component_sizes,
    };
    for (s, s2, h) in per_source {
        out.sum_d.push(s);
        out.sum_d2.push(s2);
        out.histograms.push(h);
    }
    out
}

pub fn exact_bfs_all(graph: &CompressedCsr, depth_limit: Option<u32>) -> ExactResult {
    exact_bfs_adjacency(&graph.to_adjacency(), depth_limit)
}

/// One-hop metrics computed directly from adjacency lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactLocal {
    pub connectivity: u32,
    pub control: f64,
    pub controllability: f64,
    pub clustering: f64,
}

pub fn exact_local_metrics(adj: &[Vec<u32>]) -> Vec<ExactLocal> {
    (0..adj.len())
        .into_par_iter()
        .map(|v| {
            let nv = &adj[v];
            let k = nv.len();
            let mut inv_degs: Vec<u32> = nv.iter().map(|&w| adj[w as usize].len() as u32).collect();
            inv_degs.sort_unstable();
            let control = inv_degs.iter().map(|&d| 1.0 / f64::from(d)).sum();
            let mut two_hop: Vec<u32> = nv
                .iter()
                .flat_map(|&w| adj[w as usize].iter().copied().chain(std::iter::once(w)))
                .filter(|&x| x as usize != v)
                .collect();
            two_hop.sort_unstable();
            two_hop.dedup();
            let controllability = if two_hop.is_empty() {
                f64::NAN
            } else {
                k as f64 / two_hop.len() as f64
            };
            let clustering = if k < 2 {
                f64::NAN
            } else {
                let links = nv
                    .iter()
                    .map(|&w| {
                        adj[w as usize]
                            .iter()
                            .filter(|x| nv.binary_search(x).is_ok())
                            .count()
                    })
                    .sum::<usize>();
                links as f64 / (k * (k - 1)) as f64
            };
            ExactLocal {
                connectivity: k as u32,
                control,
                controllability,
                clustering,
            }
        })
        .collect()
}

fn orient(ax: f64, ay: f64, bx: f64, by: f64, cx: f64, cy: f64) -> f64 {
    (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
}

/// Whether obstacle `q` blocks the open segment `p0 p1`.
///
/// Returns `(blocked, contact side)`: an obstacle that only touches the
/// sight line at one endpoint reports the side its other endpoint lies on,
/// so the caller can detect a line squeezed between two obstacles.
fn sight_test(p: [f64; 4], q: [f64; 4]) -> (bool, i8) {
    let [px, py, sx, sy] = p;
    let [ax, ay, bx, by] = q;
    let oa = orient(px, py, sx, sy, ax, ay);
    let ob = orient(px, py, sx, sy, bx, by);
    let sign = |x: f64| (x > 0.0) as i8 - (x < 0.0) as i8;
    let (sa, sb) = (sign(oa), sign(ob));
    if sa == sb {
        // both on one side, or collinear with the sight line
        return (false, 0);
    }
    // crossing parameter along the sight line
    let lambda = |x: f64, y: f64| {
        let (dx, dy) = (sx - px, sy - py);
        ((x - px) * dx + (y - py) * dy) / (dx * dx + dy * dy)
    };
    let inside = |l: f64| l > 0.0 && l < 1.0;
    if sa != 0 && sb != 0 {
        let ca = orient(ax, ay, bx, by, px, py);
        let cb = orient(ax, ay, bx, by, sx, sy);
        let blocked = sign(ca) * sign(cb) < 0;
        return (blocked, 0);
    }
    let (tx, ty, other) = if sa == 0 { (ax, ay, sb) } else { (bx, by, sa) };
    if inside(lambda(tx, ty)) {
        (false, other)
    } else {
        (false, 0)
    }
}

/// All-pairs visibility by testing each centre-to-centre sight line
/// against every obstacle segment.
pub fn brute_force_visibility(
    grid: &GridSpec,
    nodes: &NodeSet,
    segments: &[Segment],
    params: SweepParams,
) -> Vec<Vec<u32>> {
    let segs: Vec<[f64; 4]> = segments
        .iter()
        .map(|s| {
            let (ax, ay) = grid.to_grid_units(s.a);
            let (bx, by) = grid.to_grid_units(s.b);
            [ax, ay, bx, by]
        })
        .collect();
    let radius = params.radius_cells(grid);
    let n = nodes.len();
    (0..n as u32)
        .into_par_iter()
        .map(|u| {
            let (ur, uc) = grid.row_col(nodes.cell_of_node(u));
            let mut row = Vec::new();
            for v in 0..n as u32 {
                if v == u {
                    continue;
                }
                let (vr, vc) = grid.row_col(nodes.cell_of_node(v));
                let (dc, dr) = (i64::from(vc) - i64::from(uc), i64::from(vr) - i64::from(ur));
                if !within_radius(dc, dr, radius) {
                    continue;
                }
                let line = [
                    f64::from(uc) + 0.5,
                    f64::from(ur) + 0.5,
                    f64::from(vc) + 0.5,
                    f64::from(vr) + 0.5,
                ];
                let (mut left, mut right) = (false, false);
                let mut blocked = false;
                for &q in &segs {
                    let (b, side) = sight_test(line, q);
                    left |= side > 0;
                    right |= side < 0;
                    if b || (left && right) {
                        blocked = true;
                        break;
                    }
                }
                if !blocked {
                    row.push(v);
                }
            }
            row
        })
        .collect()
}

/// Agreement statistics for one metric column.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricComparison {
    pub metric: &'static str,
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub median_rel_err: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<MetricComparison>,
}

impl CompareReport {
    pub fn get(&self, metric: &str) -> Option<&MetricComparison> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "metric,pearson_r,spearman_rho,median_rel_err,n")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.metric,
                fmt_f64(r.pearson_r),
                fmt_f64(r.spearman_rho),
                fmt_f64(r.median_rel_err),
                r.n
            )?;
        }
        Ok(())
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

/// Pearson correlation; NaN when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Median of `|est - exact| / |exact|`, skipping zero exact values.
pub fn median_relative_error(est: &[f64], exact: &[f64]) -> f64 {
    let mut errs: Vec<f64> = est
        .iter()
        .zip(exact)
        .filter(|(_, &e)| e != 0.0)
        .map(|(a, e)| (a - e).abs() / e.abs())
        .collect();
    if errs.is_empty() {
        return f64::NAN;
    }
    errs.sort_by(f64::total_cmp);
    let m = errs.len();
    if m % 2 == 1 {
        errs[m / 2]
    } else {
        (errs[m / 2 - 1] + errs[m / 2]) / 2.0
    }
}

/// Compares two metric tables joined on node id.
pub fn compare(estimate: &[MetricRow], exact: &[MetricRow]) -> Result<CompareReport> {
    let by_id: HashMap<u32, &MetricRow> = exact.iter().map(|r| (r.node_id, r)).collect();
    if by_id.len() != exact.len() || estimate.len() != exact.len() {
        return Err(VgaError::NodeSetMismatch(format!(
            "{} estimated rows vs {} exact rows",
            estimate.len(),
            exact.len()
        )));
    }
    let mut pairs = Vec::with_capacity(estimate.len());
    for r in estimate {
        let Some(e) = by_id.get(&r.node_id) else {
            return Err(VgaError::NodeSetMismatch(format!(
                "node {} missing from exact rows",
                r.node_id
            )));
        };
        pairs.push((r, *e));
    }
    let rows = METRIC_COLUMNS
        .iter()
        .map(|&(metric, get)| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
                .iter()
                .map(|(a, b)| (get(a), get(b)))
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .unzip();
            MetricComparison {
                metric,
                pearson_r: pearson(&xs, &ys),
                spearman_rho: spearman(&xs, &ys),
                median_rel_err: median_relative_error(&xs, &ys),
                n: xs.len(),
            }
        })
        .collect();
    Ok(CompareReport { rows })
}
