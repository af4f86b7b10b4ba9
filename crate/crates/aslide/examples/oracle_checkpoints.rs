//! The perfect-information delivery oracle on a random schedule, checked
//! against exhaustive search where the instance is small enough.
//!
//!     cargo run --example oracle_checkpoints [seed]

use aslide::config::{Mode, NetworkConfig, ProtocolKind};
use aslide::oracle::{brute_force_delivery, compute_plan, max_delivery, OracleSolver, PlanExecutor};
use aslide::schedule::Schedule;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);

    // Small instance: the flow value must equal the exhaustive optimum.
    let small_cfg = NetworkConfig::new(4, 2, Mode::SemiAsync, ProtocolKind::OfflinePlan);
    let small = Schedule::random(4, seed, 10);
    let flow = max_delivery(&small, &small_cfg, 10);
    let brute = brute_force_delivery(&small, &small_cfg, 10).expect("small instance");
    println!("small instance (n=4, C=2, 10 rounds): flow {flow}, exhaustive {brute}");
    assert_eq!(flow, brute);

    // Checkpointed values over a longer schedule, plus plan execution.
    let cfg = NetworkConfig::new(6, 24, Mode::SemiAsync, ProtocolKind::OfflinePlan);
    let schedule = Schedule::random(6, seed, 2400);
    let mut solver = OracleSolver::new(&schedule, &cfg);
    println!("checkpoint deliveries (n=6, C=24, 2400 rounds):");
    let mut x = cfg.capacity;
    while x <= 2400 {
        println!("  by round {x:>5}: {}", solver.max_delivery_by(x));
        x += 10 * cfg.capacity;
    }
    let plan = compute_plan(&schedule, &cfg, 2400).expect("plan");
    let mut exec = PlanExecutor::new(&cfg);
    for (i, &e) in schedule.edges.iter().enumerate() {
        exec.apply_round(i as u64 + 1, e, &plan).expect("sound plan");
    }
    println!("horizon plan: value {}, executed deliveries {}", plan.value, exec.delivered());
    assert_eq!(plan.value, exec.delivered());
}
