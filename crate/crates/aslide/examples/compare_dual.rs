//! Dual-run the fully asynchronous protocol against the offline plan on one
//! schedule and print the competitive report: per-checkpoint deliveries,
//! the bound, and the delivery classification.
//!
//!     cargo run --release --example compare_dual [seed]

use aslide::config::{Mode, NetworkConfig, ProtocolKind};
use aslide::report::competitive_compare;
use aslide::schedule::Schedule;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = NetworkConfig::new(4, 128, Mode::FullyAsync, ProtocolKind::SlidePlus);
    let schedule = Schedule::random(4, seed, 10_000);
    let report = competitive_compare(&cfg, &schedule).expect("comparison");

    println!("k = {}, g(n, C) = {}", report.rows[0].k, report.rows[0].g);
    println!("     x |  online | offline |  oracle |  bound | z1/z2/z3");
    for row in report.rows.iter().step_by(10).chain(report.rows.last()) {
        println!(
            "{:>6} | {:>7} | {:>7} | {:>7} | {:>6} | {}/{}/{}",
            row.x, row.online, row.offline, row.oracle, row.bound, row.z1, row.z2, row.z3
        );
    }
    println!(
        "totals: online {}, offline {}, every checkpoint {}",
        report.online_total,
        report.offline_total,
        if report.pass { "within bound" } else { "VIOLATED" }
    );
}
