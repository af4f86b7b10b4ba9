//! Round-by-round event records and the line-delimited trace file format.
//!
//! A trace file is one JSON object per line: a metadata header first, then
//! one record per round. Streaming writes keep a crashed run's file a valid
//! prefix.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::{Mode, NetworkConfig, NodeId, ProtocolKind, SENDER};
use crate::schedule::{Edge, Schedule};

pub type PacketId = u64;

/// What a node did with the round's traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Insert,
    Receive,
    TransferOut,
    TransferIn,
    Hold,
    GhostCreate,
    GhostConsume,
    GhostDelete,
}

/// One packet moving between nodes during a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRec {
    pub packet: PacketId,
    pub from: NodeId,
    pub to: NodeId,
    /// 1-based buffer position the packet was committed at (slide-plus).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from_pos: Option<u32>,
    /// 1-based buffer position the packet landed at (slide-plus).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to_pos: Option<u32>,
}

impl MoveRec {
    pub fn is_insertion(&self) -> bool {
        self.from == SENDER
    }

    pub fn is_delivery(&self, n: u32) -> bool {
        self.to == n - 1
    }

    pub fn is_transfer(&self, n: u32) -> bool {
        !self.is_insertion() && !self.is_delivery(n)
    }
}

/// A message delivered to an endpoint during the round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsgRec {
    pub packet: Option<PacketId>,
    pub height: i64,
}

/// Recorded versus current heights behind a fully-async decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRec {
    /// Heights the endpoints committed at the previous honoring: (u's, v's).
    pub used: [i64; 2],
    /// Heights at the start of this round: (u's, v's).
    pub current: [i64; 2],
}

impl DecisionRec {
    /// True when both recorded heights are within `n` of the current ones.
    pub fn fresh_within(&self, n: i64) -> bool {
        (self.used[0] - self.current[0]).abs() <= n && (self.used[1] - self.current[1]).abs() <= n
    }
}

/// Everything observable about one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub round: u64,
    pub edge: (NodeId, NodeId),
    /// Messages delivered during the round: `[to lower endpoint, to higher]`.
    pub delivered: [Option<MsgRec>; 2],
    /// Actions taken: `[lower endpoint, higher endpoint]`.
    pub actions: [Vec<Action>; 2],
    pub moves: Vec<MoveRec>,
    /// Post-round heights indexed by node id; sender and receiver slots are 0.
    pub heights: Vec<u64>,
    /// Post-round ghost counts per internal node (slide-plus only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ghosts: Option<Vec<u32>>,
    /// Post-round outstanding-request counts per internal node (slide-plus).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outstanding: Option<Vec<u32>>,
    /// Longest pending queue over the directed edges after the round.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_queue: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<DecisionRec>,
    /// Cumulative insertions by the sender.
    pub y: u64,
    /// Cumulative packets output by the receiver.
    pub z: u64,
    /// Cumulative internal-to-internal transfers.
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub version: u32,
    pub n: u32,
    pub capacity: u64,
    pub mode: Mode,
    pub protocol: ProtocolKind,
    pub adversary: String,
    pub seed: Option<u64>,
    pub rounds: u64,
}

pub const TRACE_VERSION: u32 = 1;

/// The full deterministic record of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub records: Vec<EventRecord>,
}

#[derive(Debug)]
pub enum TraceError {
    Io(std::io::Error),
    Format { line: usize, reason: String },
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::Io(e) => write!(f, "trace io: {e}"),
            TraceError::Format { line, reason } => write!(f, "trace line {line}: {reason}"),
        }
    }
}

impl std::error::Error for TraceError {}

impl From<std::io::Error> for TraceError {
    fn from(e: std::io::Error) -> Self {
        TraceError::Io(e)
    }
}

impl Trace {
    pub fn config(&self) -> NetworkConfig {
        NetworkConfig::new(self.meta.n, self.meta.capacity, self.meta.mode, self.meta.protocol)
    }

    /// The realized schedule, suitable for `--emit-schedule` and replay.
    pub fn schedule(&self) -> Schedule {
        Schedule::new(self.meta.n, self.records.iter().map(|r| Edge::new(r.edge.0, r.edge.1)).collect())
    }

    /// Internal heights at the start of a 1-based round.
    pub fn heights_before(&self, round: u64) -> Vec<u64> {
        if round <= 1 {
            return vec![0; self.meta.n as usize - 2];
        }
        let rec = &self.records[round as usize - 2];
        rec.heights[1..self.meta.n as usize - 1].to_vec()
    }

    pub fn write_to(&self, w: &mut dyn Write) -> Result<(), TraceError> {
        let mut line = serde_json::to_string(&self.meta).expect("meta serializes");
        line.push('\n');
        w.write_all(line.as_bytes())?;
        for rec in &self.records {
            let mut line = serde_json::to_string(rec).expect("record serializes");
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("in-memory write");
        out
    }

    pub fn read_from(r: &mut dyn BufRead) -> Result<Trace, TraceError> {
        let mut lines = r.lines();
        let head = lines.next().ok_or(TraceError::Format { line: 1, reason: "empty trace".into() })??;
        let meta: TraceMeta = serde_json::from_str(&head)
            .map_err(|e| TraceError::Format { line: 1, reason: e.to_string() })?;
        let mut records = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: EventRecord = serde_json::from_str(&line)
                .map_err(|e| TraceError::Format { line: idx + 2, reason: e.to_string() })?;
            records.push(rec);
        }
        Ok(Trace { meta, records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_trace() -> Trace {
        Trace {
            meta: TraceMeta {
                version: TRACE_VERSION,
                n: 4,
                capacity: 16,
                mode: Mode::SemiAsync,
                protocol: ProtocolKind::Slide,
                adversary: "random".into(),
                seed: Some(3),
                rounds: 1,
            },
            records: vec![EventRecord {
                round: 1,
                edge: (0, 1),
                delivered: [
                    Some(MsgRec { packet: None, height: 0 }),
                    Some(MsgRec { packet: Some(1), height: 19 }),
                ],
                actions: [vec![Action::Insert], vec![Action::TransferIn]],
                moves: vec![MoveRec { packet: 1, from: 0, to: 1, from_pos: None, to_pos: None }],
                heights: vec![0, 1, 0, 0],
                ghosts: None,
                outstanding: None,
                max_queue: None,
                decision: None,
                y: 1,
                z: 0,
                t: 0,
            }],
        }
    }

    #[test]
    fn file_round_trip_is_exact() {
        let t = tiny_trace();
        let bytes = t.to_bytes();
        let back = Trace::read_from(&mut &bytes[..]).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn heights_before_first_round_are_zero() {
        let t = tiny_trace();
        assert_eq!(t.heights_before(1), vec![0, 0]);
    }
}
