//! The network-potential ledger over a semi-asynchronous dual run: delivery
//! classification, the per-round family lower bound, and the fresh-class
//! cardinality check.
//!
//!     cargo run --example ledger_evolution [seed]

use aslide::config::{Mode, NetworkConfig, ProtocolKind};
use aslide::dual::dual_run;
use aslide::oracle::compute_plan;
use aslide::potential::classify::classify_deliveries;
use aslide::potential::phi::{fresh_count_checks, phi_evolution, LedgerSource};
use aslide::schedule::Schedule;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    // Small capacity keeps the online protocol idle often enough for some
    // plan deliveries to dodge every co-movement.
    let cfg = NetworkConfig::new(4, 8, Mode::SemiAsync, ProtocolKind::Slide);
    let rounds = 4000u64;
    let schedule = Schedule::random(cfg.n, seed, rounds);
    let plan = compute_plan(&schedule, &cfg, rounds).expect("plan");
    let dual = dual_run(&cfg, &schedule, &plan).expect("dual run");

    let classification = classify_deliveries(&dual).expect("classification");
    println!(
        "deliveries: plan {}, online {}; classes: co-moved {}, fresh {}, stale {}",
        plan.value,
        dual.online_delivered,
        classification.co_moved.len(),
        classification.fresh.len(),
        classification.stale.len()
    );

    let ledger = phi_evolution(&dual, &classification).expect("ledger");
    let movements = ledger.entries.iter().filter(|e| e.source == LedgerSource::Movement).count();
    let shifts = ledger.entries.iter().filter(|e| e.source == LedgerSource::PotentialShift).count();
    println!(
        "ledger: final {}, {} movement credits of {}, {} mirrored potential shifts, {} tracked packets",
        ledger.final_phi,
        movements,
        4 * cfg.capacity,
        shifts,
        ledger.tracked
    );
    println!("lower bound: {} round evaluations, {} violations", ledger.rounds.len(), ledger.violations);

    for (x, z2, bound, ok) in fresh_count_checks(&dual, &classification, 512) {
        println!("fresh count by {x:>5}: {z2} <= {bound}  {}", if ok { "ok" } else { "VIOLATED" });
    }
}
