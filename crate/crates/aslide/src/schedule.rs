//! Honored-edge schedules and the plain-text replay file format.
//!
//! A replay file carries one round per line as `x u v`: the 1-based round
//! index followed by the two endpoints of the honored edge.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::NodeId;
use crate::rng::Rng;

/// An unordered node pair; construction normalizes the endpoint order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    a: NodeId,
    b: NodeId,
}

impl Edge {
    pub fn new(u: NodeId, v: NodeId) -> Edge {
        assert!(u != v, "self-loop edge");
        Edge { a: u.min(v), b: u.max(v) }
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    pub fn touches(&self, v: NodeId) -> bool {
        self.a == v || self.b == v
    }

    pub fn other(&self, v: NodeId) -> NodeId {
        debug_assert!(self.touches(v));
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E({}, {})", self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleError {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "schedule line {}: {}", self.line, self.reason)
    }
}

impl std::error::Error for ScheduleError {}

/// An ordered sequence of honored edges; round `r` (1-based) honors
/// `edges[r - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub n: u32,
    pub edges: Vec<Edge>,
}

impl Schedule {
    pub fn new(n: u32, edges: Vec<Edge>) -> Schedule {
        Schedule { n, edges }
    }

    pub fn rounds(&self) -> u64 {
        self.edges.len() as u64
    }

    /// Uniform independent edge choices over all unordered pairs,
    /// deterministic per seed.
    pub fn random(n: u32, seed: u64, rounds: u64) -> Schedule {
        let mut rng = Rng::new(seed);
        let edges = (0..rounds).map(|_| random_edge(n, &mut rng)).collect();
        Schedule { n, edges }
    }

    pub fn parse(text: &str, n: u32) -> Result<Schedule, ScheduleError> {
        let mut edges = Vec::new();
        let mut expected = 1u64;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| ScheduleError { line: line_no, reason };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 columns, got {}", fields.len())));
            }
            let x: u64 = fields[0].parse().map_err(|_| err(format!("bad round index `{}`", fields[0])))?;
            let u: u32 = fields[1].parse().map_err(|_| err(format!("bad node id `{}`", fields[1])))?;
            let v: u32 = fields[2].parse().map_err(|_| err(format!("bad node id `{}`", fields[2])))?;
            if x != expected {
                return Err(err(format!("round index {x}, expected {expected} (strictly increasing from 1)")));
            }
            if u >= n || v >= n {
                return Err(err(format!("node id out of range for n = {n}")));
            }
            if u == v {
                return Err(err(format!("self-loop edge ({u}, {v})")));
            }
            edges.push(Edge::new(u, v));
            expected += 1;
        }
        Ok(Schedule { n, edges })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.edges.iter().enumerate() {
            let (u, v) = e.endpoints();
            out.push_str(&format!("{} {} {}\n", i + 1, u, v));
        }
        out
    }
}

pub fn random_edge(n: u32, rng: &mut Rng) -> Edge {
    let pairs = n as u64 * (n as u64 - 1) / 2;
    let mut k = rng.below(pairs);
    for u in 0..n {
        let fan = (n - u - 1) as u64;
        if k < fan {
            return Edge::new(u, u + 1 + k as u32);
        }
        k -= fan;
    }
    unreachable!("pair unranking out of bounds")
}
