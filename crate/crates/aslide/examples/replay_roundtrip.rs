//! Determinism demonstration: run, emit the realized schedule as a replay
//! file, parse it back, run again, and compare the traces byte for byte.
//!
//!     cargo run --example replay_roundtrip [seed]

use aslide::adversary::{RandomAdversary, ReplayAdversary};
use aslide::config::{Mode, NetworkConfig, ProtocolKind};
use aslide::net::run;
use aslide::schedule::Schedule;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(9);
    let cfg = NetworkConfig::new(4, 128, Mode::FullyAsync, ProtocolKind::SlidePlus);

    let mut adversary = RandomAdversary::new(cfg.n, seed);
    let original = run(&cfg, &mut adversary, 3000).expect("clean run");

    let text = original.schedule().to_text();
    println!("emitted schedule: {} lines, first `{}`", text.lines().count(), text.lines().next().unwrap());

    let parsed = Schedule::parse(&text, cfg.n).expect("replay file parses");
    let mut replay = ReplayAdversary::new(parsed);
    let replayed = run(&cfg, &mut replay, 3000).expect("clean replay");

    assert_eq!(original.records, replayed.records, "replay must reproduce every record");
    println!("replayed trace matches the original: {} rounds, byte-identical records", 3000);

    // Same seed, fresh generator: byte-identical files.
    let mut again = RandomAdversary::new(cfg.n, seed);
    let second = run(&cfg, &mut again, 3000).expect("clean run");
    assert_eq!(original.to_bytes(), second.to_bytes());
    println!("same seed reproduces the trace file byte for byte");
}
