//! Angular-sweep visibility.
//!
//! For each source cell the plane is split into eight octants. Within an
//! octant, a cell offset is described by its distance along the octant's
//! principal axis (`u`, the ring index) and its offset across it (`w`), and
//! a ray from the source by its tangent `w / u` in `[0, 1]`. The sweep keeps
//! a sorted list of open tangent intervals ("gaps"), walks rings outward,
//! subtracts the tangent shadow of every obstacle piece lying between the
//! previous ring and the current one, and reports the ring's cells whose
//! tangent still falls in a gap. Once every gap has closed the octant stops,
//! so work tracks the number of visible cells rather than the search area.
//!
//! All geometry is done in grid units relative to the source centre, so
//! cell centres sit on the integer lattice and target tangents are the
//! exact rationals `j / k`.

use crate::geometry::{GridSpec, NodeSet, ObstacleRaster, Segment};

/// Gaps narrower than this (in tangent units) are dropped.
pub const TAN_EPSILON: f64 = 1e-9;

/// Closed interval `[lo, hi]` of tangent values. Used both for open gaps
/// and for (open) blocked shadows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanGap {
    pub lo: f64,
    pub hi: f64,
}

impl TanGap {
    pub const FULL: TanGap = TanGap { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    /// Visibility radius in metres; `None` is unlimited.
    pub radius: Option<f64>,
}

impl SweepParams {
    pub fn unlimited() -> Self {
        Self { radius: None }
    }

    pub fn with_radius(radius: f64) -> Self {
        Self {
            radius: Some(radius),
        }
    }

    /// Radius in grid units.
    pub fn radius_cells(&self, grid: &GridSpec) -> Option<f64> {
        self.radius.map(|r| r / grid.spacing)
    }
}

/// Euclidean radius test between cell centres, in grid units.
#[inline]
pub fn within_radius(dc: i64, dr: i64, radius_cells: Option<f64>) -> bool {
    match radius_cells {
        None => true,
        Some(r) => ((dc * dc + dr * dr) as f64) <= r * r,
    }
}

/// One octant's frame: `along` and `across` unit steps in (col, row).
#[derive(Debug, Clone, Copy)]
struct Octant {
    along: (i64, i64),
    across: (i64, i64),
}

/// Octant `k` covers polar angles `[k * 45, (k + 1) * 45]` degrees; both
/// bounding rays are included and duplicates are removed afterwards.
const OCTANTS: [Octant; 8] = [
    Octant {
        along: (1, 0),
        across: (0, 1),
    },
    Octant {
        along: (0, 1),
        across: (1, 0),
    },
    Octant {
        along: (0, 1),
        across: (-1, 0),
    },
    Octant {
        along: (-1, 0),
        across: (0, 1),
    },
    Octant {
        along: (-1, 0),
        across: (0, -1),
    },
    Octant {
        along: (0, -1),
        across: (-1, 0),
    },
    Octant {
        along: (0, -1),
        across: (1, 0),
    },
    Octant {
        along: (1, 0),
        across: (0, -1),
    },
];

impl Octant {
    #[inline]
    fn to_local(&self, dx: f64, dy: f64) -> (f64, f64) {
        let u = self.along.0 as f64 * dx + self.along.1 as f64 * dy;
        let w = self.across.0 as f64 * dx + self.across.1 as f64 * dy;
        (u, w)
    }

    #[inline]
    fn cell_offset(&self, a: i64, j: i64) -> (i64, i64) {
        (
            self.along.0 * a + self.across.0 * j,
            self.along.1 * a + self.across.1 * j,
        )
    }

    /// Number of rings available before the grid edge.
    fn extent(&self, row: i64, col: i64, grid: &GridSpec) -> i64 {
        match self.along {
            (1, 0) => grid.cols as i64 - 1 - col,
            (-1, 0) => col,
            (0, 1) => grid.rows as i64 - 1 - row,
            _ => row,
        }
    }
}

/// Tangent shadow of the part of a segment whose along-coordinate lies in
/// `[u_lo, u_hi]`, for a segment given in source-relative local coordinates
/// `(ua, wa) -> (ub, wb)`. Returned as an unclipped open interval.
fn shadow(ua: f64, wa: f64, ub: f64, wb: f64, u_lo: f64, u_hi: f64) -> Option<(f64, f64)> {
    let u_lo = u_lo.max(0.0);
    let (p, q) = if ua == ub {
        if ua < u_lo || ua > u_hi || ua <= 0.0 {
            return None;
        }
        ((ua, wa), (ub, wb))
    } else {
        // the clipped point on a window edge is computed from the edge value
        // alone, so neighbouring rings produce bit-identical shared endpoints
        let w_at = |u_edge: f64| wa + (u_edge - ua) / (ub - ua) * (wb - wa);
        let s_at_lo = (u_lo - ua) / (ub - ua);
        let s_at_hi = (u_hi - ua) / (ub - ua);
        let ((s_a, e_a), (s_b, e_b)) = if s_at_lo <= s_at_hi {
            ((s_at_lo, u_lo), (s_at_hi, u_hi))
        } else {
            ((s_at_hi, u_hi), (s_at_lo, u_lo))
        };
        if s_a > 1.0 || s_b < 0.0 {
            return None;
        }
        let start = if s_a <= 0.0 {
            (ua, wa)
        } else {
            (e_a, w_at(e_a))
        };
        let end = if s_b >= 1.0 {
            (ub, wb)
        } else {
            (e_b, w_at(e_b))
        };
        (start, end)
    };
    let tan = |(u, w): (f64, f64)| -> Option<f64> {
        if u > 0.0 {
            Some(w / u)
        } else if w > 0.0 {
            Some(f64::INFINITY)
        } else if w < 0.0 {
            Some(f64::NEG_INFINITY)
        } else {
            None
        }
    };
    let (t1, t2) = (tan(p)?, tan(q)?);
    let (lo, hi) = (t1.min(t2), t1.max(t2));
    (lo < hi).then_some((lo, hi))
}

/// Tangent interval that `seg` occludes for targets on ring `ring` of
/// `octant`, i.e. the shadow of the segment's part between rings
/// `ring - 1` and `ring`, clipped to `[0, 1]`. `source` is the source cell.
pub fn project_segment_to_tanspace(
    seg: &Segment,
    source_cell: u32,
    grid: &GridSpec,
    octant: usize,
    ring: u32,
) -> Vec<TanGap> {
    let (row, col) = grid.row_col(source_cell);
    let (sx, sy) = (col as f64 + 0.5, row as f64 + 0.5);
    let (ax, ay) = grid.to_grid_units(seg.a);
    let (bx, by) = grid.to_grid_units(seg.b);
    let o = &OCTANTS[octant];
    let (ua, wa) = o.to_local(ax - sx, ay - sy);
    let (ub, wb) = o.to_local(bx - sx, by - sy);
    let k = ring as f64;
    match shadow(ua, wa, ub, wb, k - 1.0, k) {
        Some((lo, hi)) => {
            let (lo, hi) = (lo.max(0.0), hi.min(1.0));
            if lo < hi {
                vec![TanGap::new(lo, hi)]
            } else {
                Vec::new()
            }
        }
        None => Vec::new(),
    }
}

/// Removes the open intervals in `blocked` from the closed intervals in
/// `gaps`, dropping any remainder narrower than `epsilon`.
///
/// `gaps` must be sorted and disjoint; `blocked` may be in any order and may
/// overlap. The result is sorted and disjoint.
pub fn subtract_gaps(gaps: &[TanGap], blocked: &[TanGap], epsilon: f64) -> Vec<TanGap> {
    let mut out = Vec::with_capacity(gaps.len() + 1);
    subtract_gaps_into(gaps, blocked, epsilon, &mut out);
    out
}

fn subtract_gaps_into(gaps: &[TanGap], blocked: &[TanGap], epsilon: f64, out: &mut Vec<TanGap>) {
    out.clear();
    // blocked is expected sorted by lo here; callers sort it
    let mut sorted;
    let blocked = if blocked.windows(2).all(|w| w[0].lo <= w[1].lo) {
        blocked
    } else {
        sorted = blocked.to_vec();
        sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        &sorted[..]
    };
    let mut bi = 0;
    for g in gaps {
        // skip shadows entirely left of this gap; they cannot affect later gaps
        while bi < blocked.len() && blocked[bi].hi <= g.lo {
            bi += 1;
        }
        let mut cur_lo = g.lo;
        let mut j = bi;
        while j < blocked.len() && blocked[j].lo < g.hi {
            let b = blocked[j];
            if b.lo >= cur_lo {
                push_gap(out, cur_lo, b.lo, epsilon);
            }
            if b.hi > cur_lo {
                cur_lo = b.hi;
            }
            if cur_lo >= g.hi {
                break;
            }
            j += 1;
        }
        if cur_lo <= g.hi {
            push_gap(out, cur_lo, g.hi, epsilon);
        }
    }
}

#[inline]
fn push_gap(out: &mut Vec<TanGap>, lo: f64, hi: f64, epsilon: f64) {
    if hi - lo >= epsilon && hi > lo {
        out.push(TanGap { lo, hi });
    }
}

/// Per-thread scratch for [`Sieve::visible_cells_with`].
#[derive(Debug, Default)]
pub struct SieveScratch {
    stamp: Vec<u32>,
    epoch: u32,
    gaps: Vec<TanGap>,
    next_gaps: Vec<TanGap>,
    blocked: Vec<TanGap>,
    out: Vec<u32>,
}

/// Visibility oracle over one prepared study area.
#[derive(Debug, Clone, Copy)]
pub struct Sieve<'a> {
    pub grid: &'a GridSpec,
    pub nodes: &'a NodeSet,
    pub obstacles: &'a ObstacleRaster,
    pub params: SweepParams,
}

impl<'a> Sieve<'a> {
    pub fn new(
        grid: &'a GridSpec,
        nodes: &'a NodeSet,
        obstacles: &'a ObstacleRaster,
        params: SweepParams,
    ) -> Self {
        Self {
            grid,
            nodes,
            obstacles,
            params,
        }
    }

    pub fn scratch(&self) -> SieveScratch {
        SieveScratch::default()
    }

    /// Node ids visible from `source`, sorted ascending, source excluded.
    pub fn visible_cells(&self, source: u32) -> Vec<u32> {
        let mut scratch = self.scratch();
        self.visible_cells_with(source, &mut scratch).to_vec()
    }

    pub fn visible_cells_with<'s>(&self, source: u32, s: &'s mut SieveScratch) -> &'s [u32] {
        let grid = self.grid;
        let n_seg = self.obstacles.segments().len();
        if s.stamp.len() != n_seg {
            s.stamp = vec![0; n_seg];
            s.epoch = 0;
        }
        s.out.clear();
        let src_cell = self.nodes.cell_of_node(source);
        let (row, col) = grid.row_col(src_cell);
        let (row, col) = (row as i64, col as i64);
        let (sx, sy) = (col as f64 + 0.5, row as f64 + 0.5);
        let radius = self.params.radius_cells(grid);
        let max_ring_radius = radius.map(|r| (r + 1e-9).floor() as i64);
        let in_grid =
            |r: i64, c: i64| r >= 0 && c >= 0 && r < grid.rows as i64 && c < grid.cols as i64;

        for oct in &OCTANTS {
            let mut k_max = oct.extent(row, col, grid);
            if let Some(rk) = max_ring_radius {
                k_max = k_max.min(rk);
            }
            s.gaps.clear();
            s.gaps.push(TanGap::FULL);
            for k in 1..=k_max {
                s.epoch = s.epoch.wrapping_add(1);
                if s.epoch == 0 {
                    s.stamp.iter_mut().for_each(|x| *x = 0);
                    s.epoch = 1;
                }
                s.blocked.clear();
                for a in [k - 1, k] {
                    for j in -1..=k + 1 {
                        let (dc, dr) = oct.cell_offset(a, j);
                        let (r, c) = (row + dr, col + dc);
                        if !in_grid(r, c) {
                            continue;
                        }
                        let cell = grid.cell_index(r as u32, c as u32);
                        for &seg in self.obstacles.bin(cell) {
                            if s.stamp[seg as usize] == s.epoch {
                                continue;
                            }
                            s.stamp[seg as usize] = s.epoch;
                            let [ax, ay, bx, by] = self.obstacles.segment_grid_coords(seg);
                            let (ua, wa) = oct.to_local(ax - sx, ay - sy);
                            let (ub, wb) = oct.to_local(bx - sx, by - sy);
                            if let Some((lo, hi)) = shadow(ua, wa, ub, wb, (k - 1) as f64, k as f64)
                            {
                                let (lo, hi) = (lo.max(0.0), hi.min(1.0));
                                if lo < hi {
                                    s.blocked.push(TanGap { lo, hi });
                                }
                            }
                        }
                    }
                }
                if !s.blocked.is_empty() {
                    s.blocked.sort_by(|a, b| a.lo.total_cmp(&b.lo));
                    subtract_gaps_into(&s.gaps, &s.blocked, TAN_EPSILON, &mut s.next_gaps);
                    std::mem::swap(&mut s.gaps, &mut s.next_gaps);
                }
                if s.gaps.is_empty() {
                    break;
                }
                let kf = k as f64;
                for g in &s.gaps {
                    let j_lo = ((g.lo * kf).floor() as i64 - 1).max(0);
                    let j_hi = ((g.hi * kf).ceil() as i64 + 1).min(k);
                    for j in j_lo..=j_hi {
                        let t = j as f64 / kf;
                        if !g.contains(t) {
                            continue;
                        }
                        let (dc, dr) = oct.cell_offset(k, j);
                        let (r, c) = (row + dr, col + dc);
                        if !in_grid(r, c) || !within_radius(dc, dr, radius) {
                            continue;
                        }
                        if let Some(node) =
                            self.nodes.node_of_cell(grid.cell_index(r as u32, c as u32))
                        {
                            s.out.push(node);
                        }
                    }
                }
            }
        }
        s.out.sort_unstable();
        s.out.dedup();
        &s.out
    }
}

/// Convenience wrapper matching the free-function form of the sweep.
pub fn visible_cells(
    source: u32,
    grid: &GridSpec,
    nodes: &NodeSet,
    obstacles: &ObstacleRaster,
    params: SweepParams,
) -> Vec<u32> {
    Sieve::new(grid, nodes, obstacles, params).visible_cells(source)
}
