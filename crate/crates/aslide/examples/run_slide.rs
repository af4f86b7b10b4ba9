//! Run the slide protocol against a seeded random schedule and print what
//! happened.
//!
//!     cargo run --example run_slide [seed] [rounds]

use aslide::adversary::RandomAdversary;
use aslide::config::{Mode, NetworkConfig, ProtocolKind};
use aslide::net::run;
use aslide::verify::invariant_scan;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let rounds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5000);

    let cfg = NetworkConfig::new(8, 64, Mode::SemiAsync, ProtocolKind::Slide);
    cfg.validate().expect("valid configuration");
    let mut adversary = RandomAdversary::new(cfg.n, seed);
    let trace = run(&cfg, &mut adversary, rounds).expect("clean run");

    let last = trace.records.last().unwrap();
    println!("n = {}, C = {}, seed = {seed}, rounds = {rounds}", cfg.n, cfg.capacity);
    println!("inserted  {:>8}", last.y);
    println!("delivered {:>8}", last.z);
    println!("transfers {:>8}", last.t);
    println!("final internal heights: {:?}", &last.heights[1..cfg.n as usize - 1]);

    // Every run is scanned against an independent custody replay.
    let stats = invariant_scan(&trace).expect("invariants hold");
    println!(
        "invariant scan: clean; min transfer drop {:?} (floor {}), max transfers per packet {} (cap {})",
        stats.min_drop,
        cfg.share() - 1,
        stats.max_transfers_per_packet,
        2 * cfg.n
    );
}
