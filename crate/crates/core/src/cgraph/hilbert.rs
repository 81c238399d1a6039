//! Hilbert-curve node reordering.
//!
//! Cells map to curve positions with the classic iterative `xy2d` (x = col,
//! y = row) on a `2^k x 2^k` square, `k = ceil(log2(max(rows, cols)))`.
//! On a 2x2 grid this visits (row, col) = (0,0), (1,0), (1,1), (0,1).

use super::{CompressedCsr, CsrBuilder, GraphGrid};
use crate::error::{Result, VgaError};

/// Largest supported curve order (side `2^16`), keeping positions in `u32`.
pub const MAX_ORDER: u32 = 16;

/// Curve order for a grid, or an error if the grid is too large.
pub fn hilbert_order(rows: u32, cols: u32) -> Result<u32> {
    let side = rows.max(cols).max(1);
    let order = u32::BITS - (side - 1).leading_zeros();
    if order > MAX_ORDER {
        return Err(VgaError::HilbertTooLarge { rows, cols });
    }
    Ok(order)
}

fn rotate(n: u64, x: &mut u64, y: &mut u64, rx: u64, ry: u64) {
    if ry == 0 {
        if rx == 1 {
            *x = n - 1 - *x;
            *y = n - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

/// Curve position of `(x, y)` on a `side x side` square (`side` a power of two).
pub fn xy2d(side: u64, mut x: u64, mut y: u64) -> u64 {
    let mut d = 0;
    let mut s = side / 2;
    while s > 0 {
        let rx = u64::from(x & s > 0);
        let ry = u64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        rotate(side, &mut x, &mut y, rx, ry);
        s /= 2;
    }
    d
}

/// Inverse of [`xy2d`].
pub fn d2xy(side: u64, d: u64) -> (u64, u64) {
    let (mut x, mut y) = (0, 0);
    let mut t = d;
    let mut s = 1;
    while s < side {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        rotate(s, &mut x, &mut y, rx, ry);
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    (x, y)
}

/// Renumbers nodes in Hilbert order of their grid cells and rebuilds the
/// stream with remapped, re-sorted rows. The result records, per new id, the
/// id the node had in the original (pre-reorder) graph. Component labels
/// are carried over unchanged.
pub fn hilbert_reorder(csr: &CompressedCsr) -> Result<CompressedCsr> {
    let spec = csr.grid.spec;
    let order = hilbert_order(spec.rows, spec.cols)?;
    let side = 1u64 << order;
    let n = csr.node_count();

    let keys: Vec<u64> = csr
        .grid
        .cell_of_node
        .iter()
        .map(|&cell| {
            let (row, col) = spec.row_col(cell);
            xy2d(side, col as u64, row as u64)
        })
        .collect();
    let mut old_of_new: Vec<u32> = (0..n as u32).collect();
    old_of_new.sort_by_key(|&v| (keys[v as usize], v));
    let mut new_of_old = vec![0u32; n];
    for (new, &old) in old_of_new.iter().enumerate() {
        new_of_old[old as usize] = new as u32;
    }

    let grid = GraphGrid {
        spec,
        cell_of_node: old_of_new
            .iter()
            .map(|&o| csr.grid.cell_of_node[o as usize])
            .collect(),
    };
    let mut builder = CsrBuilder::with_grid(grid);
    let mut row = Vec::new();
    for (new, &old) in old_of_new.iter().enumerate() {
        row.clear();
        row.extend(csr.neighbors(old).map(|w| new_of_old[w as usize]));
        row.sort_unstable();
        builder.push_row(new as u32, &row)?;
    }
    let mut out = builder.finish()?;
    out.components.component_id = old_of_new
        .iter()
        .map(|&o| csr.components.component_id[o as usize])
        .collect();
    out.components.sizes = csr.components.sizes.clone();
    out.hilbert_inverse = Some(old_of_new.iter().map(|&o| csr.original_id(o)).collect());
    Ok(out)
}
