//! Seeded synthetic study areas: a rectangular boundary scattered with
//! axis-aligned rectangular buildings at real-valued coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Polygon;

#[derive(Debug, Clone, PartialEq)]
pub struct Town {
    pub boundary: Polygon,
    pub buildings: Vec<Polygon>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TownParams {
    pub width: f64,
    pub height: f64,
    pub buildings: usize,
    /// Building side lengths are drawn from `[min_side, max_side)`.
    pub min_side: f64,
    pub max_side: f64,
}

impl TownParams {
    pub fn square(side: f64, buildings: usize, min_side: f64, max_side: f64) -> Self {
        Self {
            width: side,
            height: side,
            buildings,
            min_side,
            max_side,
        }
    }
}

pub fn town(params: &TownParams, seed: u64) -> Town {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buildings = (0..params.buildings)
        .map(|_| {
            let w = rng.gen_range(params.min_side..params.max_side);
            let h = rng.gen_range(params.min_side..params.max_side);
            let x = rng.gen_range(0.0..(params.width - w).max(f64::MIN_POSITIVE));
            let y = rng.gen_range(0.0..(params.height - h).max(f64::MIN_POSITIVE));
            Polygon::rect(x, y, x + w, y + h)
        })
        .collect();
    Town {
        boundary: Polygon::rect(0.0, 0.0, params.width, params.height),
        buildings,
    }
}
