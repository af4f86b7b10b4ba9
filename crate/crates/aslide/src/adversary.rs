//! Honored-edge schedule generators: the two adaptive lower-bound
//! constructions, seeded random schedules, and file replay.
//!
//! Both adaptive adversaries are functions of the victim's height vector
//! only, and they read it only at cycle and segment boundaries. Replaying
//! the recorded heights through the same rule must reproduce the schedule
//! exactly; `check_cyclic_schedule` and `check_greedy_schedule` do that from
//! a finished trace.

use std::fmt;

use crate::config::{NetworkConfig, NodeId, SENDER};
use crate::rng::Rng;
use crate::schedule::{random_edge, Edge, Schedule};
use crate::trace::Trace;

/// Supplies the next honored edge. `internal_heights[i]` is the height of
/// node `i + 1` at the start of the round; adaptive adversaries may read it,
/// schedule-determined ones ignore it.
pub trait Adversary {
    fn next_edge(&mut self, round: u64, internal_heights: &[u64]) -> Result<Edge, String>;

    fn label(&self) -> String;

    fn seed(&self) -> Option<u64> {
        None
    }
}

/// Uniform independent edge choices, deterministic per seed.
pub struct RandomAdversary {
    n: u32,
    seed: u64,
    rng: Rng,
}

impl RandomAdversary {
    pub fn new(n: u32, seed: u64) -> RandomAdversary {
        RandomAdversary { n, seed, rng: Rng::new(seed) }
    }
}

impl Adversary for RandomAdversary {
    fn next_edge(&mut self, _round: u64, _heights: &[u64]) -> Result<Edge, String> {
        Ok(random_edge(self.n, &mut self.rng))
    }

    fn label(&self) -> String {
        format!("random(seed={})", self.seed)
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }
}

/// Replays a fixed schedule.
pub struct ReplayAdversary {
    schedule: Schedule,
}

impl ReplayAdversary {
    pub fn new(schedule: Schedule) -> ReplayAdversary {
        ReplayAdversary { schedule }
    }
}

impl Adversary for ReplayAdversary {
    fn next_edge(&mut self, round: u64, _heights: &[u64]) -> Result<Edge, String> {
        self.schedule
            .edges
            .get(round as usize - 1)
            .copied()
            .ok_or_else(|| format!("replay schedule exhausted at round {round}"))
    }

    fn label(&self) -> String {
        "replay".into()
    }
}

fn fewer_packets(heights: &[u64], a: NodeId, b: NodeId) -> NodeId {
    let ha = heights[a as usize - 1];
    let hb = heights[b as usize - 1];
    // Ties break to the lowest node id.
    if hb < ha || (hb == ha && b < a) {
        b
    } else {
        a
    }
}

fn fullest_internal(heights: &[u64]) -> NodeId {
    let mut best = 1u32;
    for (i, &h) in heights.iter().enumerate() {
        let id = i as u32 + 1;
        if h > heights[best as usize - 1] {
            best = id;
        }
    }
    best
}

/// The fixed-length cyclic construction: every cycle lasts `(n-1)C` rounds.
///
/// Per cycle: C rounds sender-to-fullest, a chain of C-round internal
/// segments that always share the emptier endpoint of the previous segment,
/// then C rounds from that endpoint to the receiver.
pub struct CyclicAdversary {
    n: u32,
    capacity: u64,
    labels: Vec<NodeId>,
    carried: NodeId,
    segment: usize,
}

impl CyclicAdversary {
    pub fn new(cfg: &NetworkConfig) -> CyclicAdversary {
        CyclicAdversary { n: cfg.n, capacity: cfg.capacity, labels: Vec::new(), carried: 1, segment: 0 }
    }

    pub fn cycle_rounds(&self) -> u64 {
        (self.n as u64 - 1) * self.capacity
    }
}

impl Adversary for CyclicAdversary {
    fn next_edge(&mut self, round: u64, heights: &[u64]) -> Result<Edge, String> {
        let pos = (round - 1) % self.cycle_rounds();
        if pos == 0 {
            // Cycle start: label internal nodes by decreasing height.
            self.labels = decreasing_labeling(heights);
            self.carried = self.labels[0];
            self.segment = 0;
        } else if pos.is_multiple_of(self.capacity) {
            let seg = (pos / self.capacity) as usize;
            if seg >= 2 {
                // Entering segment `seg`: carry the endpoint that stores
                // fewer packets after the previous segment.
                let prev_target = self.labels[seg - 1];
                self.carried = fewer_packets(heights, self.carried, prev_target);
            }
            self.segment = seg;
        }
        let m = self.n as usize - 2;
        let edge = match self.segment {
            0 => Edge::new(SENDER, self.labels[0]),
            s if s < m => Edge::new(self.carried, self.labels[s]),
            _ => Edge::new(self.carried, self.n - 1),
        };
        Ok(edge)
    }

    fn label(&self) -> String {
        "cyclic".into()
    }
}

/// The variable-length greedy construction: segments chase the next
/// strictly-lower node until only the receiver is left.
pub struct GreedyAdversary {
    n: u32,
    capacity: u64,
    state: GreedyState,
    rounds_left: u64,
    edge: Option<Edge>,
    hat: NodeId,
    segments_in_cycle: u64,
    cycle_lengths: Vec<u64>,
}

enum GreedyState {
    CycleStart,
    Chasing,
    Closing,
}

impl GreedyAdversary {
    pub fn new(cfg: &NetworkConfig) -> GreedyAdversary {
        GreedyAdversary {
            n: cfg.n,
            capacity: cfg.capacity,
            state: GreedyState::CycleStart,
            rounds_left: 0,
            edge: None,
            hat: 1,
            segments_in_cycle: 0,
            cycle_lengths: Vec::new(),
        }
    }

    /// Completed cycle lengths in units of C rounds.
    pub fn cycle_lengths(&self) -> &[u64] {
        &self.cycle_lengths
    }

    /// The strictly lower node closest in height to `hat`, if any.
    fn next_target(&self, heights: &[u64]) -> Option<NodeId> {
        let own = heights[self.hat as usize - 1];
        let mut best: Option<(u64, NodeId)> = None;
        for (i, &h) in heights.iter().enumerate() {
            let id = i as u32 + 1;
            if h >= own {
                continue;
            }
            match best {
                Some((bh, bid)) if h < bh || (h == bh && id >= bid) => {}
                _ => best = Some((h, id)),
            }
        }
        best.map(|(_, id)| id)
    }
}

impl Adversary for GreedyAdversary {
    fn next_edge(&mut self, _round: u64, heights: &[u64]) -> Result<Edge, String> {
        if self.rounds_left == 0 {
            match self.state {
                GreedyState::CycleStart => {
                    let a1 = fullest_internal(heights);
                    self.edge = Some(Edge::new(SENDER, a1));
                    self.hat = a1;
                    self.segments_in_cycle = 1;
                    self.state = GreedyState::Chasing;
                }
                GreedyState::Chasing => {
                    let prev = self.edge.expect("segment already ran");
                    let (pa, pb) = prev.endpoints();
                    if pa != SENDER {
                        self.hat = fewer_packets(heights, pa, pb);
                    }
                    self.segments_in_cycle += 1;
                    if self.segments_in_cycle > self.n as u64 {
                        return Err(format!(
                            "greedy cycle exceeded {} segments; the height chain must shrink",
                            self.n
                        ));
                    }
                    match self.next_target(heights) {
                        Some(t) => self.edge = Some(Edge::new(self.hat, t)),
                        None => {
                            self.edge = Some(Edge::new(self.hat, self.n - 1));
                            self.state = GreedyState::Closing;
                        }
                    }
                }
                GreedyState::Closing => {
                    self.cycle_lengths.push(self.segments_in_cycle);
                    self.state = GreedyState::CycleStart;
                    return self.next_edge(_round, heights);
                }
            }
            self.rounds_left = self.capacity;
        }
        self.rounds_left -= 1;
        Ok(self.edge.expect("edge chosen"))
    }

    fn label(&self) -> String {
        "greedy".into()
    }
}

/// Internal node ids sorted by decreasing height, ties to the lowest id.
pub fn decreasing_labeling(internal_heights: &[u64]) -> Vec<NodeId> {
    let mut ids: Vec<NodeId> = (1..=internal_heights.len() as u32).collect();
    ids.sort_by_key(|&id| (std::cmp::Reverse(internal_heights[id as usize - 1]), id));
    ids
}

/// Bookkeeping for one adversary cycle, reconstructed from a trace.
#[derive(Debug, Clone)]
pub struct CycleInfo {
    /// 1-based cycle index.
    pub index: u64,
    /// Internal node ids under the decreasing labeling at cycle start.
    pub labels: Vec<NodeId>,
    /// Heights at cycle start, in label order.
    pub start_heights: Vec<u64>,
    /// One honored edge per C-round segment.
    pub segments: Vec<Edge>,
    /// Net packets gained by the segment's target node, per segment.
    pub net_moved: Vec<i64>,
    /// Packets the receiver output during the cycle.
    pub delivered: u64,
    /// Cycle length in units of C rounds.
    pub length_units: u64,
    /// Rounds each internal node participated in during the cycle.
    pub participation: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct ScheduleMismatch {
    pub round: u64,
    pub expected: Edge,
    pub found: Edge,
}

impl fmt::Display for ScheduleMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "round {}: rule says {}, trace has {}", self.round, self.expected, self.found)
    }
}

/// Recomputes the cyclic rule from the trace's recorded heights and checks
/// the realized schedule against it, returning per-cycle bookkeeping.
pub fn check_cyclic_schedule(trace: &Trace) -> Result<Vec<CycleInfo>, ScheduleMismatch> {
    let cfg = trace.config();
    replay_adaptive(trace, CyclicAdversary::new(&cfg), (cfg.n as u64 - 1) * cfg.capacity)
}

/// Same as [`check_cyclic_schedule`] for the greedy rule. Cycle boundaries
/// are wherever the rule closes a cycle, so lengths vary.
pub fn check_greedy_schedule(trace: &Trace) -> Result<Vec<CycleInfo>, ScheduleMismatch> {
    let cfg = trace.config();
    let mut adv = GreedyAdversary::new(&cfg);
    let mut mismatch = None;
    let mut boundaries = vec![0u64];
    for (i, rec) in trace.records.iter().enumerate() {
        let round = i as u64 + 1;
        let heights = trace.heights_before(round);
        let expected = adv.next_edge(round, &heights).map_err(|_| ScheduleMismatch {
            round,
            expected: Edge::new(0, 1),
            found: Edge::new(rec.edge.0, rec.edge.1),
        })?;
        let found = Edge::new(rec.edge.0, rec.edge.1);
        if expected != found {
            mismatch = Some(ScheduleMismatch { round, expected, found });
            break;
        }
        // A cycle ends when the receiver segment's last round is consumed.
        if matches!(adv.state, GreedyState::Closing) && adv.rounds_left == 0 {
            boundaries.push(round);
        }
    }
    if let Some(m) = mismatch {
        return Err(m);
    }
    Ok(cycles_from_boundaries(trace, &boundaries))
}

fn replay_adaptive<A: Adversary>(
    trace: &Trace,
    mut adv: A,
    cycle_rounds: u64,
) -> Result<Vec<CycleInfo>, ScheduleMismatch> {
    let mut boundaries = vec![0u64];
    for (i, rec) in trace.records.iter().enumerate() {
        let round = i as u64 + 1;
        let heights = trace.heights_before(round);
        let expected = adv
            .next_edge(round, &heights)
            .map_err(|_| ScheduleMismatch { round, expected: Edge::new(0, 1), found: Edge::new(rec.edge.0, rec.edge.1) })?;
        let found = Edge::new(rec.edge.0, rec.edge.1);
        if expected != found {
            return Err(ScheduleMismatch { round, expected, found });
        }
        if round.is_multiple_of(cycle_rounds) {
            boundaries.push(round);
        }
    }
    Ok(cycles_from_boundaries(trace, &boundaries))
}

/// Builds per-cycle bookkeeping given the rounds at which cycles end.
fn cycles_from_boundaries(trace: &Trace, boundaries: &[u64]) -> Vec<CycleInfo> {
    let cfg = trace.config();
    let m = cfg.internal_count();
    let mut cycles = Vec::new();
    for w in boundaries.windows(2) {
        let (start, end) = (w[0], w[1]); // rounds start+1 ..= end
        let heights_at_start = trace.heights_before(start + 1);
        let labels = decreasing_labeling(&heights_at_start);
        let start_heights: Vec<u64> = labels.iter().map(|&id| heights_at_start[id as usize - 1]).collect();
        let mut segments = Vec::new();
        let mut net_moved = Vec::new();
        let mut participation = vec![0u64; m];
        let mut seg_start = start;
        while seg_start < end {
            let seg_end = (seg_start + cfg.capacity).min(end);
            let edge = Edge::new(
                trace.records[seg_start as usize].edge.0,
                trace.records[seg_start as usize].edge.1,
            );
            segments.push(edge);
            let before = trace.heights_before(seg_start + 1);
            let after = trace.heights_before(seg_end + 1);
            let (_, target) = edge.endpoints();
            let gain = if cfg.is_internal(target) {
                after[target as usize - 1] as i64 - before[target as usize - 1] as i64
            } else {
                // Receiver segment: count deliveries.
                let z0 = if seg_start == 0 { 0 } else { trace.records[seg_start as usize - 1].z };
                trace.records[seg_end as usize - 1].z as i64 - z0 as i64
            };
            net_moved.push(gain);
            for id in cfg.internal_ids() {
                if edge.touches(id) {
                    participation[id as usize - 1] += seg_end - seg_start;
                }
            }
            seg_start = seg_end;
        }
        let z0 = if start == 0 { 0 } else { trace.records[start as usize - 1].z };
        let z1 = trace.records[end as usize - 1].z;
        cycles.push(CycleInfo {
            index: cycles.len() as u64 + 1,
            labels,
            start_heights,
            segments,
            net_moved,
            delivered: z1 - z0,
            length_units: (end - start) / cfg.capacity,
            participation,
        });
    }
    cycles
}
