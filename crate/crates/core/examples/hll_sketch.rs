//! HyperLogLog counters on their own: estimates, error, and lossless union.

use vgaball::hll::{HllParams, HllSketch};

fn main() -> vgaball::Result<()> {
    for p in [6, 8, 10, 12] {
        let params = HllParams::new(p)?;
        let mut a = HllSketch::new(&params);
        let mut b = HllSketch::new(&params);
        for x in 0..60_000u64 {
            a.insert(x);
        }
        for x in 40_000..100_000u64 {
            b.insert(x);
        }
        let mut u = a.clone();
        u.union_with(&b);

        let mut direct = HllSketch::new(&params);
        (0..100_000u64).for_each(|x| direct.insert(x));

        println!(
            "p={p:<2} {:>5} B  |A|~{:>7.0}  |A u B|~{:>7.0} (true 100000, {:+.2}%, sigma {:.2}%)  union==direct: {}",
            params.counter_bytes(),
            a.estimate(),
            u.estimate(),
            100.0 * (u.estimate() / 100_000.0 - 1.0),
            100.0 * params.standard_error(),
            u.registers() == direct.registers(),
        );
    }
    Ok(())
}
