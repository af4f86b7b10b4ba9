//! Effectual heights, the family partition, and per-node potentials for a
//! random height vector, with the structural identities spelled out.
//!
//!     cargo run --example family_potentials [seed]

use aslide::potential::family::PotentialSnapshot;
use aslide::rng::Rng;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let mut rng = Rng::new(seed);
    let n = 10u32;
    let share = 10u64; // C = 100
    let m = n as usize - 2;
    let heights: Vec<u64> = (0..m).map(|_| rng.below(10 * share + 1)).collect();
    println!("internal heights by node id: {heights:?}  (n = {n}, C = {})", share * n as u64);

    let snap = PotentialSnapshot::compute(&heights, share);
    println!("label | node | height | effectual | potential");
    for (idx, &node) in snap.labeling.iter().enumerate() {
        println!(
            "{:>5} | {:>4} | {:>6} | {:>9} | {:>9}",
            idx + 1,
            node,
            snap.heights[idx],
            snap.effectual[idx],
            snap.phi_by_label[idx]
        );
    }
    for fam in &snap.families {
        let phi_sum: u64 = snap.phi_by_label[fam.lo - 1..fam.hi].iter().sum();
        println!(
            "family labels {:>2}..{:<2} cumulative {:>3} = floor {} * {} + remainder {} (potentials sum to {})",
            fam.lo,
            fam.hi,
            fam.cumulative,
            fam.floor_avg,
            fam.len(),
            fam.remainder,
            phi_sum
        );
        assert_eq!(phi_sum, fam.cumulative);
    }
}
