//! Deterministic simulator and verification lab for end-to-end routing
//! under an edge-scheduling adversary.
//!
//! The adversary decides which single edge is honored each round; protocols
//! only act when awakened on an honored edge. The crate provides:
//!
//! - the two communication models (message exchange within the round, or
//!   requests buffered by the adversary until the edge fires again),
//! - the slide protocol (semi-asynchronous) and slide-plus (fully
//!   asynchronous, recorded heights plus ghost-slot reservations),
//! - adaptive lower-bound adversaries, seeded random schedules, and replay
//!   files,
//! - a perfect-information delivery oracle via max-flow on a time-expanded
//!   graph, decomposable into an executable per-round plan,
//! - analyzers that evaluate the throughput bounds on live traces: the
//!   per-cycle potential inequality, family partitions and node potentials,
//!   the network-potential ledger, and delivery classification for dual
//!   runs.
//!
//! Everything is value-semantic and deterministic: identical inputs produce
//! byte-identical traces. See the `examples/` directory for one runnable
//! program per capability; the thin `aslide` binary exposes the same
//! machinery as `run`, `lowerbound`, `compare`, `oracle`, and `verify`
//! subcommands.

pub mod adversary;
pub mod config;
pub mod dual;
pub mod harness;
pub mod net;
pub mod oracle;
pub mod potential;
pub mod ratio;
pub mod report;
pub mod rng;
pub mod schedule;
pub mod slide;
pub mod slide_plus;
pub mod trace;
pub mod verify;

pub use config::{Mode, NetworkConfig, NodeId, ProtocolKind};
pub use net::{run, run_plan, SimError};
pub use schedule::{Edge, Schedule};
pub use trace::{PacketId, Trace};
