//! Per-node VGA metrics.
//!
//! Depth-based measures come from distance sums, either HyperBall
//! estimates or exact BFS totals. One-hop measures are always computed
//! exactly from the graph.

use rayon::prelude::*;
use std::io::Write;

use crate::cgraph::CompressedCsr;
use crate::hyperball::HyperBallState;
use crate::oracle::ExactResult;

pub const CSV_HEADER: &str = "x,y,node_id,component_id,node_count,connectivity,visual_mean_depth,\
integration_hh,integration_tekl,integration_pv,control,controllability,clustering,entropy,\
rel_entropy,first_moment,second_moment";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    /// Node id in the unreordered graph.
    pub node_id: u32,
    pub x: f64,
    pub y: f64,
    pub component_id: u32,
    pub node_count: u32,
    pub connectivity: u32,
    pub visual_mean_depth: f64,
    pub integration_hh: f64,
    pub integration_tekl: f64,
    pub integration_pv: f64,
    pub control: f64,
    pub controllability: f64,
    pub clustering: f64,
    pub entropy: f64,
    pub rel_entropy: f64,
    pub first_moment: f64,
    pub second_moment: f64,
}

type Getter = fn(&MetricRow) -> f64;

/// Numeric columns compared between modes.
pub const METRIC_COLUMNS: &[(&str, Getter)] = &[
    ("node_count", |r| f64::from(r.node_count)),
    ("connectivity", |r| f64::from(r.connectivity)),
    ("visual_mean_depth", |r| r.visual_mean_depth),
    ("integration_hh", |r| r.integration_hh),
    ("integration_tekl", |r| r.integration_tekl),
    ("integration_pv", |r| r.integration_pv),
    ("control", |r| r.control),
    ("controllability", |r| r.controllability),
    ("clustering", |r| r.clustering),
    ("entropy", |r| r.entropy),
    ("rel_entropy", |r| r.rel_entropy),
    ("first_moment", |r| r.first_moment),
    ("second_moment", |r| r.second_moment),
];

/// Visual mean depth; NaN for isolated nodes.
pub fn mean_depth(sum_d: f64, n_v: u32) -> f64 {
    if n_v < 2 {
        return f64::NAN;
    }
    sum_d / f64::from(n_v - 1)
}

/// Relative asymmetry `2 (MD - 1) / (N_v - 2)`.
pub fn relative_asymmetry(md: f64, n_v: u32) -> f64 {
    if n_v < 3 {
        return f64::NAN;
    }
    2.0 * (md - 1.0) / f64::from(n_v - 2)
}

/// Diamond-shaped normaliser `D_k` for a system of `k` nodes.
pub fn diamond_value(k: u32) -> f64 {
    let k = f64::from(k);
    2.0 * (k * (((k + 2.0) / 3.0).log2() - 1.0) + 1.0) / ((k - 1.0) * (k - 2.0))
}

/// Integration after Hillier and Hanson: `D_k / RA`.
pub fn integration_hh(md: f64, n_v: u32) -> f64 {
    if n_v < 3 || md.is_nan() || md <= 1.0 {
        return f64::NAN;
    }
    diamond_value(n_v) / relative_asymmetry(md, n_v)
}

pub fn integration_tekl(md: f64) -> f64 {
    ((md + 2.0) / 3.0).log2()
}

pub fn integration_pv(md: f64, n_v: u32) -> f64 {
    let ra = relative_asymmetry(md, n_v);
    if ra.is_nan() {
        return f64::NAN;
    }
    (1.0 - ra).clamp(0.0, 1.0)
}

/// `(MD * deg, sum_d2 / (N_v - 1))`.
pub fn moments(md: f64, deg: u32, sum_d2: f64, n_v: u32) -> (f64, f64) {
    (md * f64::from(deg), mean_depth(sum_d2, n_v))
}

/// Shannon entropy (bits) of the depth distribution at depths `>= 1`, and
/// its divergence from a Poisson law with the same mean.
pub fn depth_entropy(histogram: &[u64]) -> (f64, f64) {
    let total: u64 = histogram.iter().skip(1).sum();
    if total == 0 {
        return (f64::NAN, f64::NAN);
    }
    let total = total as f64;
    let md: f64 = histogram
        .iter()
        .enumerate()
        .skip(1)
        .map(|(d, &c)| d as f64 * c as f64)
        .sum::<f64>()
        / total;
    let (mut h, mut rel) = (0.0, 0.0);
    let mut ln_fact = 0.0;
    for (d, &c) in histogram.iter().enumerate().skip(1) {
        ln_fact += (d as f64).ln();
        if c == 0 {
            continue;
        }
        let p = c as f64 / total;
        h -= p * p.log2();
        let ln_q = d as f64 * md.ln() - md - ln_fact;
        rel += p * (p.ln() - ln_q) / std::f64::consts::LN_2;
    }
    (h, rel)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMetrics {
    pub connectivity: u32,
    pub control: f64,
    pub controllability: f64,
    pub clustering: f64,
}

/// Reusable marks for [`local_metrics_with`].
#[derive(Debug, Default, Clone)]
pub struct LocalScratch {
    in_n1: Vec<u32>,
    in_n2: Vec<u32>,
    epoch: u32,
    degs: Vec<u32>,
}

pub fn local_metrics(graph: &CompressedCsr, v: u32) -> LocalMetrics {
    local_metrics_with(graph, v, &mut LocalScratch::default())
}

pub fn local_metrics_with(graph: &CompressedCsr, v: u32, s: &mut LocalScratch) -> LocalMetrics {
    let n = graph.node_count();
    if s.in_n1.len() != n {
        s.in_n1 = vec![0; n];
        s.in_n2 = vec![0; n];
        s.epoch = 0;
    }
    s.epoch = s.epoch.wrapping_add(1);
    if s.epoch == 0 {
        s.in_n1.fill(0);
        s.in_n2.fill(0);
        s.epoch = 1;
    }
    let e = s.epoch;
    let k = graph.degree(v);
    for w in graph.neighbors(v) {
        s.in_n1[w as usize] = e;
    }
    let control = control_of(graph, v, &mut s.degs);

    let mut two_hop = 0u64;
    let mut links = 0u64;
    s.in_n2[v as usize] = e;
    for w in graph.neighbors(v) {
        if s.in_n2[w as usize] != e {
            s.in_n2[w as usize] = e;
            two_hop += 1;
        }
        for x in graph.neighbors(w) {
            if s.in_n1[x as usize] == e {
                links += 1;
            }
            if s.in_n2[x as usize] != e {
                s.in_n2[x as usize] = e;
                two_hop += 1;
            }
        }
    }
    finish_local(k, control, two_hop, links)
}

fn control_of(graph: &CompressedCsr, v: u32, degs: &mut Vec<u32>) -> f64 {
    degs.clear();
    degs.extend(graph.neighbors(v).map(|w| graph.degree(w)));
    // summed in degree order so the value does not depend on node numbering
    degs.sort_unstable();
    degs.iter().map(|&d| 1.0 / f64::from(d)).sum()
}

fn finish_local(k: u32, control: f64, two_hop: u64, links: u64) -> LocalMetrics {
    let controllability = if two_hop == 0 {
        f64::NAN
    } else {
        f64::from(k) / two_hop as f64
    };
    let clustering = if k < 2 {
        f64::NAN
    } else {
        links as f64 / (f64::from(k) * f64::from(k - 1))
    };
    LocalMetrics {
        connectivity: k,
        control,
        controllability,
        clustering,
    }
}

/// Largest bitset adjacency [`metric_rows`] will allocate.
pub const DENSE_LIMIT_BYTES: usize = 64 << 20;

/// One neighbourhood bitset per node. Turns the two-hop walk into word-wide
/// AND/OR, which pays off on the dense graphs open areas produce.
struct DenseAdjacency {
    words: usize,
    bits: Vec<u64>,
}

impl DenseAdjacency {
    fn build(graph: &CompressedCsr) -> Option<Self> {
        let n = graph.node_count();
        let words = n.div_ceil(64);
        if words.checked_mul(n)?.checked_mul(8)? > DENSE_LIMIT_BYTES {
            return None;
        }
        let mut bits = vec![0u64; n * words];
        bits.par_chunks_mut(words.max(1))
            .enumerate()
            .for_each(|(v, row)| {
                for w in graph.neighbors(v as u32) {
                    row[w as usize / 64] |= 1 << (w % 64);
                }
            });
        Some(Self { words, bits })
    }

    fn row(&self, v: u32) -> &[u64] {
        &self.bits[v as usize * self.words..(v as usize + 1) * self.words]
    }

    fn local(
        &self,
        graph: &CompressedCsr,
        v: u32,
        union: &mut Vec<u64>,
        degs: &mut Vec<u32>,
    ) -> LocalMetrics {
        let k = graph.degree(v);
        let control = control_of(graph, v, degs);
        let own = self.row(v);
        union.clear();
        union.extend_from_slice(own);
        let mut links = 0u64;
        for w in graph.neighbors(v) {
            for ((u, &a), &b) in union.iter_mut().zip(own).zip(self.row(w)) {
                links += u64::from((a & b).count_ones());
                *u |= b;
            }
        }
        union[v as usize / 64] &= !(1 << (v % 64));
        let two_hop = union.iter().map(|x| u64::from(x.count_ones())).sum();
        finish_local(k, control, two_hop, links)
    }
}

/// Source of per-node depth totals.
#[derive(Debug, Clone, Copy)]
pub enum DepthSource<'a> {
    HyperBall(&'a HyperBallState),
    /// Exact BFS results indexed by the graph's node ids.
    Exact(&'a ExactResult),
}

/// Builds one row per node, sorted by original node id.
pub fn metric_rows(graph: &CompressedCsr, depths: DepthSource<'_>) -> Vec<MetricRow> {
    let n = graph.node_count();
    let dense = DenseAdjacency::build(graph);
    let mut rows: Vec<MetricRow> = (0..n as u32)
        .into_par_iter()
        .map_init(
            || (LocalScratch::default(), Vec::new()),
            |(scratch, union), v| {
                let local = match &dense {
                    Some(d) => d.local(graph, v, union, &mut scratch.degs),
                    None => local_metrics_with(graph, v, scratch),
                };
                let n_v = graph.component_size(v);
                let (sum_d, sum_d2, (entropy, rel_entropy)) = match depths {
                    DepthSource::HyperBall(s) => {
                        let (d, d2) = s.distance_sums(v, n_v);
                        (d, d2, (f64::NAN, f64::NAN))
                    }
                    DepthSource::Exact(r) => (
                        r.sum_d[v as usize] as f64,
                        r.sum_d2[v as usize] as f64,
                        depth_entropy(&r.histograms[v as usize]),
                    ),
                };
                let md = mean_depth(sum_d, n_v);
                let (first_moment, second_moment) = moments(md, local.connectivity, sum_d2, n_v);
                let centre = graph
                    .grid()
                    .spec
                    .cell_center(graph.grid().cell_of_node[v as usize]);
                MetricRow {
                    node_id: graph.original_id(v),
                    x: centre.x,
                    y: centre.y,
                    component_id: graph.component_id(v),
                    node_count: n_v,
                    connectivity: local.connectivity,
                    visual_mean_depth: md,
                    integration_hh: integration_hh(md, n_v),
                    integration_tekl: integration_tekl(md),
                    integration_pv: integration_pv(md, n_v),
                    control: local.control,
                    controllability: local.controllability,
                    clustering: local.clustering,
                    entropy,
                    rel_entropy,
                    first_moment,
                    second_moment,
                }
            },
        )
        .collect();
    rows.sort_by_key(|r| r.node_id);
    rows
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

pub fn write_csv<W: Write>(rows: &[MetricRow], out: W) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(r.x),
            num(r.y),
            r.node_id,
            r.component_id,
            r.node_count,
            r.connectivity,
            num(r.visual_mean_depth),
            num(r.integration_hh),
            num(r.integration_tekl),
            num(r.integration_pv),
            num(r.control),
            num(r.controllability),
            num(r.clustering),
            num(r.entropy),
            num(r.rel_entropy),
            num(r.first_moment),
            num(r.second_moment),
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_bfs_all, exact_local_metrics};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn mean_depth_cases() {
        assert_eq!(mean_depth(3.0, 3), 1.5);
        assert_eq!(mean_depth(2.0, 3), 1.0);
        assert!(mean_depth(0.0, 1).is_nan());
    }

    #[test]
    fn integration_cases() {
        assert!(close(diamond_value(4), 1.0 / 3.0));
        assert!(close(integration_hh(2.0, 4), 1.0 / 3.0));
        assert!(integration_hh(1.0, 10).is_nan());
        assert!(integration_hh(2.0, 2).is_nan());
        assert_eq!(integration_tekl(1.0), 0.0);
        assert_eq!(integration_tekl(4.0), 1.0);
        assert!((integration_tekl(1.5) - 0.2224).abs() < 1e-4);
        assert_eq!(integration_pv(1.0, 10), 1.0);
        assert_eq!(integration_pv(2.0, 4), 0.0);
        assert_eq!(integration_pv(9.0, 4), 0.0);
        assert!(integration_hh(f64::NAN, 10).is_nan());
    }

    #[test]
    fn moment_cases() {
        assert_eq!(moments(1.0, 1, 1.0, 2).0, 1.0);
        assert_eq!(moments(1.0, 5, 5.0, 6).0, 5.0);
        assert_eq!(moments(1.5, 1, 5.0, 3).1, 2.5);
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(depth_entropy(&[1, 1]).0, 0.0);
        assert!(close(depth_entropy(&[1, 1, 1]).0, 1.0));
        assert!(depth_entropy(&[1]).0.is_nan());
        // one bin at depth 1 against Poisson(1): -log2(e^-1)
        assert!(close(depth_entropy(&[1, 4]).1, std::f64::consts::LOG2_E));
    }

    fn row_of(rows: &[MetricRow], id: u32) -> &MetricRow {
        rows.iter().find(|r| r.node_id == id).unwrap()
    }

    #[test]
    fn exact_rows_on_reference_graphs() {
        let p4 = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
        let g = CompressedCsr::from_adjacency(&p4).unwrap();
        let rows = metric_rows(&g, DepthSource::Exact(&exact_bfs_all(&g, None)));
        let end = row_of(&rows, 0);
        assert_eq!(end.visual_mean_depth, 2.0);
        assert!(close(end.integration_hh, 1.0 / 3.0));
        assert_eq!(end.integration_pv, 0.0);
        assert_eq!(end.second_moment, (1.0 + 4.0 + 9.0) / 3.0);
        assert_eq!(end.control, 0.5);
        assert_eq!(end.controllability, 0.5);
        assert!(end.clustering.is_nan());

        let k5: Vec<Vec<u32>> = (0..5u32)
            .map(|v| (0..5).filter(|&w| w != v).collect())
            .collect();
        let g = CompressedCsr::from_adjacency(&k5).unwrap();
        let rows = metric_rows(&g, DepthSource::Exact(&exact_bfs_all(&g, None)));
        for r in &rows {
            assert_eq!(r.visual_mean_depth, 1.0);
            assert_eq!(r.clustering, 1.0);
            assert_eq!(r.integration_pv, 1.0);
            assert!(r.integration_hh.is_nan());
            assert_eq!(r.entropy, 0.0);
        }

        let c6: Vec<Vec<u32>> = (0..6u32)
            .map(|v| {
                let mut r = vec![(v + 5) % 6, (v + 1) % 6];
                r.sort_unstable();
                r
            })
            .collect();
        let g = CompressedCsr::from_adjacency(&c6).unwrap();
        let rows = metric_rows(&g, DepthSource::Exact(&exact_bfs_all(&g, None)));
        for r in &rows {
            assert_eq!(r.visual_mean_depth, 9.0 / 5.0);
            assert_eq!(r.clustering, 0.0);
            assert_eq!(r.control, 1.0);
            assert_eq!(r.controllability, 0.5);
        }
    }

    #[test]
    fn local_metrics_match_oracle() {
        let adj = crate::cgraph::tests::random_graph(30, 0.3, 21);
        let g = CompressedCsr::from_adjacency(&adj).unwrap();
        let oracle = exact_local_metrics(&adj);
        for v in 0..30u32 {
            let l = local_metrics(&g, v);
            let o = oracle[v as usize];
            assert_eq!(l.connectivity, o.connectivity);
            assert_eq!(l.control.to_bits(), o.control.to_bits());
            assert_eq!(l.controllability.to_bits(), o.controllability.to_bits());
            assert_eq!(l.clustering.to_bits(), o.clustering.to_bits());
        }
    }

    #[test]
    fn bitset_path_matches_scalar() {
        for (n, p, seed) in [(1, 0.0, 1), (70, 0.05, 2), (130, 0.3, 3), (200, 0.01, 4)] {
            let g = CompressedCsr::from_adjacency(&crate::cgraph::tests::random_graph(n, p, seed))
                .unwrap();
            let dense = DenseAdjacency::build(&g).unwrap();
            let (mut union, mut degs) = (Vec::new(), Vec::new());
            for v in 0..n as u32 {
                let a = dense.local(&g, v, &mut union, &mut degs);
                let b = local_metrics(&g, v);
                assert_eq!(format!("{a:?}"), format!("{b:?}"), "node {v}");
            }
        }
    }

    #[test]
    fn csv_header_and_nan() {
        let g = CompressedCsr::from_adjacency(&[vec![]]).unwrap();
        let rows = metric_rows(&g, DepthSource::Exact(&exact_bfs_all(&g, None)));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 17);
        assert_eq!(fields[6], "NaN");
    }
}
