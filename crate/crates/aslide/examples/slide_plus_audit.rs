//! Fully asynchronous run with the transfer-drop audit: replay the trace,
//! recompute buffer positions, and report how far every transferred packet
//! fell.
//!
//!     cargo run --example slide_plus_audit [seed] [rounds]

use aslide::adversary::RandomAdversary;
use aslide::config::{Mode, NetworkConfig, ProtocolKind};
use aslide::net::run;
use aslide::verify::audit_transfer_drops;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(11);
    let rounds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20_000);

    let cfg = NetworkConfig::new(4, 128, Mode::FullyAsync, ProtocolKind::SlidePlus);
    let mut adversary = RandomAdversary::new(cfg.n, seed);
    let trace = run(&cfg, &mut adversary, rounds).expect("clean run");

    let last = trace.records.last().unwrap();
    println!("rounds {rounds}: inserted {}, delivered {}, transfers {}", last.y, last.z, last.t);
    let max_ghosts = trace.records.iter().filter_map(|r| r.ghosts.as_ref()).flatten().max();
    let max_out = trace.records.iter().filter_map(|r| r.outstanding.as_ref()).flatten().max();
    let max_queue = trace.records.iter().filter_map(|r| r.max_queue).max();
    println!(
        "gauges: reservations <= {:?} (cap {}), outstanding <= {:?} (cap {}), queue <= {:?} (cap 1)",
        max_ghosts, cfg.n, max_out, cfg.n, max_queue
    );

    let audit = audit_transfer_drops(&trace).expect("replay matches and drops bound");
    println!(
        "audit: {} transfers, min position drop {:?} (floor {}), max transfers per packet {} (cap {})",
        audit.transfers,
        audit.min_drop,
        cfg.share() as i64 - 4 * cfg.n as i64,
        audit.max_transfers_per_packet,
        2 * cfg.n
    );
}
