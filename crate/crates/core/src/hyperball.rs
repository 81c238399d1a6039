//! HyperBall: HLL counter propagation over the compressed graph.
//!
//! After `t` steps, counter `v` sketches the ball `B(v, t)`. The sum of
//! distances is accumulated from successive estimates as
//! `sum_d[v] += t * (c_t[v] - c_{t-1}[v])`.

use rayon::prelude::*;

use crate::cgraph::CompressedCsr;
use crate::error::{Result, VgaError};
use crate::hll::{estimate, insert_into, union_into, HllParams, HllRegisterPlane};

/// A step is productive while some estimate grows by more than this.
pub const CONVERGENCE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct HyperBallState {
    pub params: HllParams,
    pub cur: HllRegisterPlane,
    pub next: HllRegisterPlane,
    pub c_prev: Vec<f64>,
    pub c_curr: Vec<f64>,
    pub sum_d: Vec<f64>,
    pub sum_d2: Vec<f64>,
    /// Number of propagation steps executed.
    pub t: u32,
    pub converged: bool,
}

impl HyperBallState {
    /// Steps that reached new nodes: `min(depth_limit, D)` for a graph of
    /// diameter `D`. The final step that detects convergence is not counted.
    pub fn iterations(&self) -> u32 {
        if self.converged {
            self.t - 1
        } else {
            self.t
        }
    }

    pub fn node_count(&self) -> usize {
        self.sum_d.len()
    }

    /// Distance sums for `v`, given its exact component size `n_v`.
    ///
    /// Once converged, the final counter sketches the whole component, so
    /// the sums are rescaled by `n_v / c_final`. Unconverged runs return the
    /// raw sums.
    pub fn distance_sums(&self, v: u32, n_v: u32) -> (f64, f64) {
        let v = v as usize;
        let c_final = self.c_curr[v];
        if self.converged && c_final > 0.0 && self.sum_d[v] > 0.0 {
            let k = f64::from(n_v) / c_final;
            (self.sum_d[v] * k, self.sum_d2[v] * k)
        } else {
            (self.sum_d[v], self.sum_d2[v])
        }
    }
}

pub fn check_convergence(max_increase: f64) -> bool {
    max_increase <= CONVERGENCE_THRESHOLD
}

/// Counters seeded with each node's own (original) id and `c_0` estimated.
pub fn init(graph: &CompressedCsr, params: HllParams) -> Result<HyperBallState> {
    let n = graph.node_count();
    if n == 0 {
        return Err(VgaError::EmptyGraph);
    }
    let mut cur = HllRegisterPlane::new(n, params);
    let width = params.counter_bytes();
    cur.as_bytes_mut()
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(v, regs)| insert_into(regs, u64::from(graph.original_id(v as u32)), &params));
    let c0: Vec<f64> = cur
        .as_bytes()
        .par_chunks(width)
        .map(|regs| estimate(regs, &params))
        .collect();
    Ok(HyperBallState {
        params,
        next: HllRegisterPlane::new(n, params),
        cur,
        c_prev: c0.clone(),
        c_curr: c0,
        sum_d: vec![0.0; n],
        sum_d2: vec![0.0; n],
        t: 0,
        converged: false,
    })
}

/// One propagation step. Returns the largest per-node estimate increase.
pub fn iterate_once(state: &mut HyperBallState, graph: &CompressedCsr) -> f64 {
    let params = state.params;
    let width = params.counter_bytes();
    let cur = state.cur.as_bytes();
    let t = f64::from(state.t + 1);

    std::mem::swap(&mut state.c_prev, &mut state.c_curr);
    let c_prev = &state.c_prev;

    let max_increase = state
        .next
        .as_bytes_mut()
        .par_chunks_mut(width)
        .zip(state.c_curr.par_iter_mut())
        .zip(state.sum_d.par_iter_mut().zip(state.sum_d2.par_iter_mut()))
        .enumerate()
        .map(|(v, ((dst, c), (sd, sd2)))| {
            let own = &cur[v * width..(v + 1) * width];
            dst.copy_from_slice(own);
            for w in graph.neighbors(v as u32) {
                let w = w as usize;
                union_into(dst, &cur[w * width..(w + 1) * width]);
            }
            let before = c_prev[v];
            // estimates can dip where the estimator switches regimes; the
            // ball never shrinks, so neither does its size
            *c = if dst == own {
                before
            } else {
                estimate(dst, &params).max(before)
            };
            let delta = *c - before;
            *sd += t * delta;
            *sd2 += t * t * delta;
            delta
        })
        .reduce(|| 0.0, f64::max);

    std::mem::swap(&mut state.cur, &mut state.next);
    state.t += 1;
    max_increase
}

/// Runs to convergence or until `depth_limit` steps have executed.
pub fn run(
    graph: &CompressedCsr,
    params: HllParams,
    depth_limit: Option<u32>,
) -> Result<HyperBallState> {
    let mut state = init(graph, params)?;
    loop {
        if depth_limit.is_some_and(|d| state.t >= d) {
            break;
        }
        let inc = iterate_once(&mut state, graph);
        log::debug!("hyperball step {} max increase {inc:.3}", state.t);
        if check_convergence(inc) {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}
