//! Slide against the cyclic lower-bound adversary: per-cycle deliveries,
//! the cycle potential, the exact per-cycle inequality, and the
//! perfect-information oracle's deliveries on the same schedule.
//!
//!     cargo run --example lowerbound_cycles [cycles]

use aslide::adversary::CyclicAdversary;
use aslide::config::{Mode, NetworkConfig, ProtocolKind};
use aslide::net::run;
use aslide::oracle::OracleSolver;
use aslide::potential::psi::check_cycle_inequality;

fn main() {
    let cycles: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let cfg = NetworkConfig::new(8, 64, Mode::SemiAsync, ProtocolKind::Slide);
    let cycle_rounds = (cfg.n as u64 - 1) * cfg.capacity;

    let mut adversary = CyclicAdversary::new(&cfg);
    let trace = run(&cfg, &mut adversary, cycles * cycle_rounds).expect("clean run");
    let checks = check_cycle_inequality(&trace).expect("complete cycles");

    let schedule = trace.schedule();
    let mut solver = OracleSolver::new(&schedule, &cfg);

    println!("cycle |  online Z | oracle | psi before -> after | Z + dPsi <= 7C/(n-2)");
    let mut all = true;
    for c in &checks {
        let oracle = solver.max_delivery_by(c.cycle * cycle_rounds);
        let verdict = if c.pass { "ok" } else { "VIOLATED" };
        println!(
            "{:>5} | {:>9} | {:>6} | {:>10.3} -> {:<10.3} | {} <= {}  {}",
            c.cycle, c.delivered, oracle, c.psi_start.to_f64(), c.psi_end.to_f64(), c.lhs, c.rhs, verdict
        );
        all &= c.pass && oracle == c.cycle * cfg.capacity;
    }
    let last = checks.last().unwrap();
    println!(
        "cumulative: online {} vs oracle {} ({}x); every check {}",
        last.cumulative_delivered,
        cycles * cfg.capacity,
        cycles as f64 * cfg.capacity as f64 / last.cumulative_delivered.max(1) as f64,
        if all { "passed" } else { "FAILED" }
    );
}
