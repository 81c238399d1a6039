//! HyperLogLog counters with 4-bit registers packed two per byte.
//!
//! Register `j` of a counter lives in byte `j / 2`, low nibble for even `j`.
//! A plane stores `N` counters back to back, `m / 2` bytes each.

use crate::error::{Result, VgaError};

pub const MIN_PRECISION: u32 = 4;
pub const MAX_PRECISION: u32 = 16;
/// Largest register value a nibble can hold.
pub const REGISTER_MAX: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HllParams {
    pub p: u32,
    pub m: usize,
    pub alpha: f64,
}

impl HllParams {
    pub fn new(p: u32) -> Result<Self> {
        if !(MIN_PRECISION..=MAX_PRECISION).contains(&p) {
            return Err(VgaError::PrecisionOutOfRange(p));
        }
        let m = 1usize << p;
        let alpha = match m {
            16 => 0.673,
            32 => 0.697,
            64 => 0.709,
            _ => 0.7213 / (1.0 + 1.079 / m as f64),
        };
        Ok(Self { p, m, alpha })
    }

    /// Bytes per counter.
    pub fn counter_bytes(&self) -> usize {
        self.m / 2
    }

    /// Nominal relative standard error `1.04 / sqrt(m)`.
    pub fn standard_error(&self) -> f64 {
        1.04 / (self.m as f64).sqrt()
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Register index and rank for `element`.
#[inline]
pub fn hash_position(element: u64, params: &HllParams) -> (usize, u8) {
    let h = splitmix64(element);
    let idx = (h >> (64 - params.p)) as usize;
    let rest = h << params.p;
    let rho = (rest.leading_zeros() + 1).min(64 - params.p + 1);
    (idx, rho.min(REGISTER_MAX as u32) as u8)
}

#[inline]
pub fn get_register(regs: &[u8], j: usize) -> u8 {
    let b = regs[j / 2];
    if j % 2 == 0 {
        b & 0x0F
    } else {
        b >> 4
    }
}

#[inline]
pub fn set_register_max(regs: &mut [u8], j: usize, value: u8) {
    let b = &mut regs[j / 2];
    if j % 2 == 0 {
        if value > *b & 0x0F {
            *b = (*b & 0xF0) | value;
        }
    } else if value > *b >> 4 {
        *b = (*b & 0x0F) | (value << 4);
    }
}

/// Inserts `element` into one counter.
#[inline]
pub fn insert_into(regs: &mut [u8], element: u64, params: &HllParams) {
    let (j, rho) = hash_position(element, params);
    set_register_max(regs, j, rho);
}

const LO: u64 = 0x0F0F_0F0F_0F0F_0F0F;
const HIGH_BITS: u64 = 0x8080_8080_8080_8080;

/// Per-byte max of two words whose bytes all hold values below 128.
#[inline]
fn bytewise_max(x: u64, y: u64) -> u64 {
    let ge = ((x | HIGH_BITS).wrapping_sub(y)) & HIGH_BITS;
    let mask = (ge >> 7).wrapping_mul(0xFF);
    (x & mask) | (y & !mask)
}

/// Nibble-wise max of two packed register words.
#[inline]
pub fn nibble_max(a: u64, b: u64) -> u64 {
    let lo = bytewise_max(a & LO, b & LO);
    let hi = bytewise_max((a >> 4) & LO, (b >> 4) & LO);
    lo | (hi << 4)
}

/// Register-wise union: `dst[j] = max(dst[j], src[j])`.
pub fn union_into(dst: &mut [u8], src: &[u8]) {
    assert_eq!(dst.len(), src.len());
    let mut d = dst.chunks_exact_mut(8);
    let mut s = src.chunks_exact(8);
    for (dc, sc) in (&mut d).zip(&mut s) {
        let x = u64::from_le_bytes(dc.try_into().unwrap());
        let y = u64::from_le_bytes(sc.try_into().unwrap());
        dc.copy_from_slice(&nibble_max(x, y).to_le_bytes());
    }
    for (db, &sb) in d.into_remainder().iter_mut().zip(s.remainder()) {
        let lo = (*db & 0x0F).max(sb & 0x0F);
        let hi = (*db >> 4).max(sb >> 4);
        *db = lo | (hi << 4);
    }
}

/// `(sum of 2^-reg, zero count)` for each possible byte.
static BYTE_TABLE: std::sync::LazyLock<[(f64, u8); 256]> = std::sync::LazyLock::new(|| {
    let mut t = [(0.0, 0u8); 256];
    for (b, e) in t.iter_mut().enumerate() {
        let (lo, hi) = ((b & 0x0F) as i32, (b >> 4) as i32);
        e.0 = 2f64.powi(-lo) + 2f64.powi(-hi);
        e.1 = u8::from(lo == 0) + u8::from(hi == 0);
    }
    t
});

/// Classic estimate: `alpha_m m^2 / sum 2^-reg`, replaced by linear
/// counting `m ln(m / zeros)` when that is at most `2.5 m` and some
/// register is still zero.
pub fn estimate_classic(regs: &[u8], params: &HllParams) -> f64 {
    let table = &*BYTE_TABLE;
    let mut sum = 0.0;
    let mut zeros = 0usize;
    for &b in regs {
        let (s, z) = table[b as usize];
        sum += s;
        zeros += z as usize;
    }
    let m = params.m as f64;
    let raw = params.alpha * m * m / sum;
    if raw <= 2.5 * m && zeros > 0 {
        m * (m / zeros as f64).ln()
    } else {
        raw
    }
}

/// Register-value histogram of one counter.
pub fn register_histogram(regs: &[u8]) -> [u32; 16] {
    let mut c = [0u32; 16];
    for &b in regs {
        c[(b & 0x0F) as usize] += 1;
        c[(b >> 4) as usize] += 1;
    }
    c
}

fn sigma(x: f64) -> f64 {
    if x == 1.0 {
        return f64::INFINITY;
    }
    let (mut x, mut y, mut z) = (x, 1.0, x);
    loop {
        x *= x;
        let prev = z;
        z += x * y;
        y += y;
        if z == prev {
            return z;
        }
    }
}

fn tau(x: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    let (mut x, mut y, mut z) = (x, 1.0, 1.0 - x);
    loop {
        x = x.sqrt();
        let prev = z;
        y *= 0.5;
        z -= (1.0 - x) * (1.0 - x) * y;
        if z == prev {
            return z / 3.0;
        }
    }
}

/// Cardinality estimate of one counter: Ertl's improved estimator over the
/// register histogram, with the saturated value 15 treated as censored.
pub fn estimate(regs: &[u8], params: &HllParams) -> f64 {
    let c = register_histogram(regs);
    let m = params.m as f64;
    // registers hold 1..=14 exactly; 15 means "15 or more"
    let q = (REGISTER_MAX as usize - 1).min(64 - params.p as usize);
    let sat = c[q + 1..].iter().sum::<u32>();
    let mut z = m * tau(1.0 - f64::from(sat) / m);
    for k in (1..=q).rev() {
        z = 0.5 * (z + f64::from(c[k]));
    }
    z += m * sigma(f64::from(c[0]) / m);
    m * m / (2.0 * std::f64::consts::LN_2) / z
}

/// `N` counters in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct HllRegisterPlane {
    params: HllParams,
    n: usize,
    bytes: Vec<u8>,
}

impl HllRegisterPlane {
    pub fn new(n: usize, params: HllParams) -> Self {
        Self {
            params,
            n,
            bytes: vec![0; n * params.counter_bytes()],
        }
    }

    pub fn params(&self) -> &HllParams {
        &self.params
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.bytes
    }

    pub fn counter(&self, v: u32) -> &[u8] {
        let w = self.params.counter_bytes();
        &self.bytes[v as usize * w..(v as usize + 1) * w]
    }

    pub fn counter_mut(&mut self, v: u32) -> &mut [u8] {
        let w = self.params.counter_bytes();
        &mut self.bytes[v as usize * w..(v as usize + 1) * w]
    }

    pub fn register(&self, v: u32, j: usize) -> u8 {
        get_register(self.counter(v), j)
    }

    pub fn insert(&mut self, counter: u32, element: u64) {
        let params = self.params;
        insert_into(self.counter_mut(counter), element, &params);
    }

    pub fn estimate(&self, v: u32) -> f64 {
        estimate(self.counter(v), &self.params)
    }
}

/// A single standalone counter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HllSketch {
    p: u32,
    regs: Vec<u8>,
}

impl HllSketch {
    pub fn new(params: &HllParams) -> Self {
        Self {
            p: params.p,
            regs: vec![0; params.counter_bytes()],
        }
    }

    pub fn params(&self) -> HllParams {
        HllParams::new(self.p).expect("precision validated at construction")
    }

    pub fn insert(&mut self, element: u64) {
        let params = self.params();
        insert_into(&mut self.regs, element, &params);
    }

    pub fn union_with(&mut self, other: &HllSketch) {
        assert_eq!(self.p, other.p, "sketches must share a precision");
        union_into(&mut self.regs, &other.regs);
    }

    pub fn estimate(&self) -> f64 {
        estimate(&self.regs, &self.params())
    }

    pub fn registers(&self) -> &[u8] {
        &self.regs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn params(p: u32) -> HllParams {
        HllParams::new(p).unwrap()
    }

    #[test]
    fn params_table() {
        assert!(HllParams::new(3).is_err());
        assert!(HllParams::new(17).is_err());
        assert_eq!(params(4).alpha, 0.673);
        assert_eq!(params(5).alpha, 0.697);
        assert_eq!(params(6).alpha, 0.709);
        assert!((params(10).alpha - 0.7213 / (1.0 + 1.079 / 1024.0)).abs() < 1e-15);
        assert_eq!(params(10).counter_bytes(), 512);
    }

    #[test]
    fn splitmix_reference_values() {
        // Finalizer applied to the first output state of the reference
        // generator seeded with 0 (state = golden gamma).
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0), 0);
        assert_eq!(splitmix64(12345), splitmix64(12345));
    }

    #[test]
    fn splitmix_injective_on_first_million() {
        let mut hs: Vec<u64> = (0..1_000_000u64).map(splitmix64).collect();
        hs.sort_unstable();
        hs.dedup();
        assert_eq!(hs.len(), 1_000_000);
    }

    #[test]
    fn splitmix_avalanche() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let samples = 10_000;
        let mut flips = 0u64;
        for _ in 0..samples {
            let x: u64 = rng.gen();
            let bit = rng.gen_range(0..64);
            flips += (splitmix64(x) ^ splitmix64(x ^ (1 << bit))).count_ones() as u64;
        }
        let mean = flips as f64 / samples as f64;
        assert!(mean >= 20.0, "mean flipped bits {mean}");
    }

    #[test]
    fn hash_position_matches_bit_definition() {
        let p = params(10);
        for x in 0..2000u64 {
            let h = splitmix64(x);
            let (j, rho) = hash_position(x, &p);
            assert_eq!(j, (h >> 54) as usize);
            let mut lz = 0;
            while lz < 54 && h & (1 << (53 - lz)) == 0 {
                lz += 1;
            }
            assert_eq!(rho as u32, (lz + 1).min(15));
        }
    }

    #[test]
    fn nibble_layout() {
        let mut regs = vec![0u8; 8];
        set_register_max(&mut regs, 0, 3);
        set_register_max(&mut regs, 1, 9);
        set_register_max(&mut regs, 5, 15);
        assert_eq!(regs[0], 0x93);
        assert_eq!(regs[2], 0xF0);
        set_register_max(&mut regs, 1, 2);
        assert_eq!(get_register(&regs, 1), 9);
    }

    #[test]
    fn fresh_insert_sets_one_register() {
        let p = params(10);
        let mut plane = HllRegisterPlane::new(3, p);
        plane.insert(1, 42);
        let nonzero = (0..p.m).filter(|&j| plane.register(1, j) != 0).count();
        assert_eq!(nonzero, 1);
        assert!(plane.counter(0).iter().all(|&b| b == 0));
        let before = plane.clone();
        plane.insert(1, 42);
        assert_eq!(plane, before);
    }

    #[test]
    fn estimate_small_cases() {
        let p = params(10);
        let mut s = HllSketch::new(&p);
        assert_eq!(s.estimate(), 0.0);
        s.insert(7);
        let e = s.estimate();
        assert!((0.5..=2.0).contains(&e));
        // linear counting with one occupied register
        let lc = 1024.0 * (1024.0f64 / 1023.0).ln();
        assert!((estimate_classic(s.registers(), &p) - lc).abs() < 1e-9);
        assert!((e - lc).abs() < 1e-3);
    }

    #[test]
    fn thousand_within_three_sigma() {
        let p = params(10);
        let mut s = HllSketch::new(&p);
        for x in 0..1000 {
            s.insert(x);
        }
        let bound = 3.0 * p.standard_error() * 1000.0;
        assert!((s.estimate() - 1000.0).abs() <= bound);
    }

    #[test]
    fn classic_estimate_regimes() {
        let p = params(4);
        assert_eq!(estimate_classic(&[0u8; 8], &p), 0.0);
        // every register at 1: raw = alpha * m * 2 = 21.5 <= 40, no zeros
        let ones = [0x11u8; 8];
        assert!((estimate_classic(&ones, &p) - 0.673 * 32.0).abs() < 1e-12);
        // half the registers zero: linear counting m ln 2
        let half = [0x01u8; 8];
        assert!((estimate_classic(&half, &p) - 16.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn improved_estimate_tracks_truth() {
        for pp in [4, 8, 12] {
            let p = params(pp);
            let mut s = HllSketch::new(&p);
            assert_eq!(s.estimate(), 0.0);
            let mut next = 0u64;
            for target in [10u64, 100, 1000, 5000, 20_000] {
                while next < target {
                    s.insert(next);
                    next += 1;
                }
                let rel = (s.estimate() - target as f64).abs() / target as f64;
                assert!(
                    rel < 5.0 * p.standard_error(),
                    "p={pp} n={target} rel {rel}"
                );
            }
        }
    }

    #[test]
    fn saturated_registers_stay_finite() {
        let p = params(4);
        // every register censored: no finite estimate exists
        assert_eq!(estimate(&[0xFFu8; 8], &p), f64::INFINITY);
        let mut nearly = [0xFFu8; 8];
        nearly[0] = 0xFE;
        let e = estimate(&nearly, &p);
        assert!(e.is_finite() && e > 16.0 * 2f64.powi(14));
    }

    #[test]
    fn nibble_max_matches_scalar() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let (a, b): (u64, u64) = (rng.gen(), rng.gen());
            let got = nibble_max(a, b);
            for k in 0..16 {
                let sh = 4 * k;
                let want = ((a >> sh) & 0xF).max((b >> sh) & 0xF);
                assert_eq!((got >> sh) & 0xF, want);
            }
        }
    }

    #[test]
    fn union_matches_sketch_of_union() {
        let p = params(8);
        let mut a = HllSketch::new(&p);
        let mut b = HllSketch::new(&p);
        let mut both = HllSketch::new(&p);
        for x in 0..500 {
            a.insert(x);
            both.insert(x);
        }
        for x in 300..900 {
            b.insert(x);
            both.insert(x);
        }
        a.union_with(&b);
        assert_eq!(a, both);
    }

    proptest! {
        #[test]
        fn union_algebra(xs in proptest::collection::vec(any::<u64>(), 0..200),
                         ys in proptest::collection::vec(any::<u64>(), 0..200),
                         zs in proptest::collection::vec(any::<u64>(), 0..200)) {
            let p = params(6);
            let sk = |v: &[u64]| { let mut s = HllSketch::new(&p); v.iter().for_each(|&x| s.insert(x)); s };
            let (a, b, c) = (sk(&xs), sk(&ys), sk(&zs));
            let mut ab = a.clone(); ab.union_with(&b);
            let mut ba = b.clone(); ba.union_with(&a);
            prop_assert_eq!(&ab, &ba);
            let mut ab_c = ab.clone(); ab_c.union_with(&c);
            let mut bc = b.clone(); bc.union_with(&c);
            let mut a_bc = a.clone(); a_bc.union_with(&bc);
            prop_assert_eq!(&ab_c, &a_bc);
            let mut aa = a.clone(); aa.union_with(&a);
            prop_assert_eq!(&aa, &a);
            let mut ab_regs = a.clone(); ab_regs.union_with(&b);
            for (x, y) in ab_regs.registers().iter().zip(a.registers()) {
                prop_assert!(x & 0x0F >= y & 0x0F && x >> 4 >= y >> 4);
            }
        }

        #[test]
        fn insertion_order_invariant(mut xs in proptest::collection::vec(any::<u64>(), 0..300)) {
            let p = params(7);
            let mut a = HllSketch::new(&p);
            xs.iter().for_each(|&x| a.insert(x));
            xs.reverse();
            let mut b = HllSketch::new(&p);
            xs.iter().for_each(|&x| b.insert(x));
            prop_assert_eq!(a, b);
        }
    }
}
