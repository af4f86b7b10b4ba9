//! The perfect-information delivery oracle: maximum packets deliverable by
//! any protocol on a fixed schedule, via integral max-flow on a
//! time-expanded graph, plus a path decomposition that turns the flow into
//! an executable per-round movement plan.
//!
//! Conceptually the graph has one vertex per (node, round boundary), split
//! in two so the memory bound binds as a vertex capacity: everything a node
//! holds after a round crosses its internal arc, capacity C for internal
//! nodes and unbounded for the two endpoints (the sender's stream is
//! infinite and the receiver outputs on arrival). Holding a packet across a
//! round is an unbounded arc to the next boundary, and the honored edge
//! contributes a unit-capacity transfer arc per direction, except back into
//! the sender or out of the receiver, movements that cannot raise the
//! optimum and would make decomposed plans unexecutable. The split is what
//! allows an exchange across the honored edge at full buffers while
//! forbidding a node from accepting one round and shedding the surplus the
//! next.
//!
//! A node's contents only change at rounds it participates in, so the
//! materialized graph contracts every untouched stretch of boundaries into
//! a single capacity-checked "holding period" vertex pair. Augmenting paths
//! then scale with a packet's hop count rather than with the schedule
//! length, which is what makes checkpointed oracle sweeps over tens of
//! thousands of rounds affordable.

use std::collections::HashMap;

use crate::config::{NetworkConfig, NodeId, SENDER};
use crate::schedule::{Edge, Schedule};
use crate::trace::{MoveRec, PacketId};

const INF: u64 = 1 << 62;

/// Dinic max-flow over an explicit arc list; reverse arcs live at `id ^ 1`.
/// Vertices are allocated on demand.
struct FlowGraph {
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<u64>,
    level: Vec<u32>,
    iter: Vec<u32>,
}

impl FlowGraph {
    fn new() -> FlowGraph {
        FlowGraph { adj: Vec::new(), to: Vec::new(), cap: Vec::new(), level: Vec::new(), iter: Vec::new() }
    }

    fn add_vertex(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: u64) -> u32 {
        let id = self.to.len() as u32;
        self.to.push(v as u32);
        self.cap.push(cap);
        self.to.push(u as u32);
        self.cap.push(0);
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.clear();
        self.level.resize(self.adj.len(), u32::MAX);
        self.level[s] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            if self.level[v] >= self.level[t] {
                // Vertices past the sink's level cannot lie on a shortest
                // augmenting path.
                continue;
            }
            for &a in &self.adj[v] {
                let w = self.to[a as usize] as usize;
                if self.cap[a as usize] > 0 && self.level[w] == u32::MAX {
                    self.level[w] = self.level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        self.level[t] != u32::MAX
    }

    /// One blocking-flow phase, fully iterative.
    fn blocking(&mut self, s: usize, t: usize) -> u64 {
        let mut total = 0u64;
        let mut path: Vec<u32> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                let mut bottleneck = u64::MAX;
                for &a in &path {
                    bottleneck = bottleneck.min(self.cap[a as usize]);
                }
                for &a in &path {
                    self.cap[a as usize] -= bottleneck;
                    self.cap[(a ^ 1) as usize] += bottleneck;
                }
                total += bottleneck;
                let cut = path
                    .iter()
                    .position(|&a| self.cap[a as usize] == 0)
                    .expect("bottleneck saturates an arc");
                path.truncate(cut);
                v = match path.last() {
                    Some(&a) => self.to[a as usize] as usize,
                    None => s,
                };
                continue;
            }
            let mut advanced = false;
            while (self.iter[v] as usize) < self.adj[v].len() {
                let a = self.adj[v][self.iter[v] as usize];
                let w = self.to[a as usize] as usize;
                if self.cap[a as usize] > 0 && self.level[v] != u32::MAX && self.level[w] == self.level[v].wrapping_add(1) {
                    path.push(a);
                    v = w;
                    advanced = true;
                    break;
                }
                self.iter[v] += 1;
            }
            if !advanced {
                if v == s {
                    break;
                }
                self.level[v] = u32::MAX;
                let a = path.pop().expect("non-source dead end reached via an arc");
                let u = self.to[(a ^ 1) as usize] as usize;
                self.iter[u] += 1;
                v = u;
            }
        }
        total
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut flow = 0;
        while self.bfs(s, t) {
            self.iter.clear();
            self.iter.resize(self.adj.len(), 0);
            flow += self.blocking(s, t);
        }
        flow
    }

    /// Net flow pushed through a forward arc.
    fn flow_on(&self, forward_arc: u32) -> u64 {
        debug_assert!(forward_arc.is_multiple_of(2));
        self.cap[forward_arc as usize + 1]
    }
}

/// Incremental oracle over one schedule: checkpoints are answered by
/// extending the same graph and pushing more flow.
pub struct OracleSolver {
    n: u32,
    capacity: u64,
    schedule: Schedule,
    graph: FlowGraph,
    sink: usize,
    source: usize,
    built_rounds: usize,
    value: u64,
    /// Entry/exit vertices of each node's current holding period.
    cur_entry: Vec<usize>,
    cur_exit: Vec<usize>,
    /// Forward transfer arc -> the movement it encodes.
    transfer_info: HashMap<u32, (u64, NodeId, NodeId)>,
}

impl OracleSolver {
    pub fn new(schedule: &Schedule, cfg: &NetworkConfig) -> OracleSolver {
        let mut solver = OracleSolver {
            n: cfg.n,
            capacity: cfg.capacity,
            schedule: schedule.clone(),
            graph: FlowGraph::new(),
            sink: 0,
            source: 0,
            built_rounds: 0,
            value: 0,
            cur_entry: vec![0; cfg.n as usize],
            cur_exit: vec![0; cfg.n as usize],
            transfer_info: HashMap::new(),
        };
        solver.sink = solver.graph.add_vertex();
        for node in 0..cfg.n {
            solver.open_period(node, false);
        }
        solver.source = solver.cur_entry[SENDER as usize];
        solver
    }

    /// Starts a fresh holding period for `node`: a split vertex pair whose
    /// internal arc enforces the node's memory bound, chained (unless it is
    /// the node's first period) from the previous one. The receiver's
    /// periods drain into the sink.
    fn open_period(&mut self, node: NodeId, chain: bool) {
        let receiver = self.n - 1;
        let entry = self.graph.add_vertex();
        let exit = self.graph.add_vertex();
        let cap = if node == SENDER || node == receiver { INF } else { self.capacity };
        self.graph.add_edge(entry, exit, cap);
        if chain {
            // Carry the stayers over.
            self.graph.add_edge(self.cur_exit[node as usize], entry, INF);
        }
        self.cur_entry[node as usize] = entry;
        self.cur_exit[node as usize] = exit;
        if node == receiver {
            self.graph.add_edge(exit, self.sink, INF);
        }
    }

    fn extend_to(&mut self, rounds: usize) {
        assert!(rounds <= self.schedule.edges.len(), "checkpoint beyond schedule");
        let receiver = self.n - 1;
        for t in self.built_rounds..rounds {
            let (u, v) = self.schedule.edges[t].endpoints();
            let round = t as u64 + 1;
            let from_u = self.cur_exit[u as usize];
            let from_v = self.cur_exit[v as usize];
            self.open_period(u, true);
            self.open_period(v, true);
            // One unit per direction, except that nothing flows back into
            // the sender or out of the receiver: such movements can never
            // raise the optimum (unbounded supply, terminal deliveries) and
            // excluding them keeps every decomposed plan executable.
            let a = self.graph.add_edge(from_u, self.cur_entry[v as usize], 1);
            self.transfer_info.insert(a, (round, u, v));
            if u != SENDER && v != receiver {
                let b = self.graph.add_edge(from_v, self.cur_entry[u as usize], 1);
                self.transfer_info.insert(b, (round, v, u));
            }
            self.built_rounds = t + 1;
        }
    }

    /// Maximum packets deliverable by the end of round `x`.
    pub fn max_delivery_by(&mut self, x: u64) -> u64 {
        if x == 0 {
            return 0;
        }
        self.extend_to(x as usize);
        self.value += self.graph.max_flow(self.source, self.sink);
        self.value
    }

    /// Decomposes the current flow into unit sender-to-receiver paths and
    /// returns the executable plan. Call after `max_delivery_by`.
    pub fn into_plan(self) -> Result<OfflinePlan, String> {
        let rounds = self.built_rounds;
        // Remaining undecomposed flow, indexed by forward arc id / 2.
        let arc_pairs = self.graph.to.len() / 2;
        let mut remaining: Vec<u64> = (0..arc_pairs).map(|i| self.graph.flow_on(2 * i as u32)).collect();
        let mut hop_of: Vec<Option<(u64, NodeId, NodeId)>> = vec![None; arc_pairs];
        for (&arc, &hop) in &self.transfer_info {
            hop_of[arc as usize / 2] = Some(hop);
        }
        let mut ptr = vec![0usize; self.graph.adj.len()];
        let mut paths: Vec<Vec<(u64, NodeId, NodeId)>> = Vec::with_capacity(self.value as usize);
        for _ in 0..self.value {
            let mut hops = Vec::new();
            let mut v = self.source;
            while v != self.sink {
                let arc = loop {
                    let arcs = &self.graph.adj[v];
                    if ptr[v] >= arcs.len() {
                        return Err(format!("decomposition stuck at vertex {v}"));
                    }
                    let a = arcs[ptr[v]];
                    if a.is_multiple_of(2) && remaining[a as usize / 2] > 0 {
                        break a;
                    }
                    ptr[v] += 1;
                };
                remaining[arc as usize / 2] -= 1;
                if let Some(hop) = hop_of[arc as usize / 2] {
                    hops.push(hop);
                }
                v = self.graph.to[arc as usize] as usize;
            }
            paths.push(hops);
        }
        let leftover: u64 = remaining.iter().sum();
        if leftover != 0 {
            return Err(format!("decomposition residue: {leftover} arc units uncovered"));
        }
        // Packet ids follow source-departure order.
        paths.sort_by_key(|hops| hops.first().map(|&(r, _, _)| r).unwrap_or(u64::MAX));
        let mut moves_by_round: Vec<Vec<PlanMove>> = vec![Vec::new(); rounds];
        for (idx, hops) in paths.iter().enumerate() {
            let packet = idx as u64 + 1;
            for &(round, from, to) in hops {
                moves_by_round[round as usize - 1].push(PlanMove { packet, from, to });
            }
        }
        Ok(OfflinePlan {
            n: self.n,
            horizon: rounds as u64,
            value: self.value,
            itineraries: paths,
            moves_by_round,
        })
    }
}

/// Maximum packets any protocol can deliver on `schedule` by round `x`.
pub fn max_delivery(schedule: &Schedule, cfg: &NetworkConfig, x: u64) -> u64 {
    OracleSolver::new(schedule, cfg).max_delivery_by(x)
}

/// Computes the plan realizing `max_delivery(schedule, cfg, x)`.
pub fn compute_plan(schedule: &Schedule, cfg: &NetworkConfig, x: u64) -> Result<OfflinePlan, String> {
    let mut solver = OracleSolver::new(schedule, cfg);
    solver.max_delivery_by(x);
    solver.into_plan()
}

/// One packet crossing the honored edge in a plan round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanMove {
    pub packet: PacketId,
    pub from: NodeId,
    pub to: NodeId,
}

/// An executable movement plan: at most one packet per direction per round.
#[derive(Debug, Clone)]
pub struct OfflinePlan {
    pub n: u32,
    pub horizon: u64,
    /// The max-flow value; executing the plan delivers exactly this many.
    pub value: u64,
    /// Hop list per packet, 1-based ids at `index + 1`.
    pub itineraries: Vec<Vec<(u64, NodeId, NodeId)>>,
    moves_by_round: Vec<Vec<PlanMove>>,
}

impl OfflinePlan {
    pub fn moves_at(&self, round: u64) -> &[PlanMove] {
        self.moves_by_round
            .get(round as usize - 1)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Rounds at which each packet reaches the receiver.
    pub fn delivery_round(&self, packet: PacketId) -> Option<u64> {
        self.itineraries[packet as usize - 1]
            .iter()
            .find(|&&(_, _, to)| to == self.n - 1)
            .map(|&(r, _, _)| r)
    }
}

/// Where a plan packet currently sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanLocation {
    AtSender,
    At(NodeId),
    Delivered,
}

/// Replays an [`OfflinePlan`] move by move, enforcing custody and capacity.
pub struct PlanExecutor {
    n: u32,
    capacity: u64,
    location: Vec<PlanLocation>,
    loads: Vec<u64>,
    delivered: u64,
}

impl PlanExecutor {
    pub fn new(cfg: &NetworkConfig) -> PlanExecutor {
        PlanExecutor {
            n: cfg.n,
            capacity: cfg.capacity,
            location: Vec::new(),
            loads: vec![0; cfg.internal_count()],
            delivered: 0,
        }
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn load(&self, node: NodeId) -> u64 {
        self.loads[node as usize - 1]
    }

    pub fn location(&self, packet: PacketId) -> PlanLocation {
        self.location
            .get(packet as usize - 1)
            .copied()
            .unwrap_or(PlanLocation::AtSender)
    }

    /// Applies one round's moves; both directions count as simultaneous.
    pub fn apply_round(&mut self, round: u64, edge: Edge, plan: &OfflinePlan) -> Result<Vec<MoveRec>, String> {
        let receiver = self.n - 1;
        let mut recs = Vec::new();
        for mv in plan.moves_at(round) {
            if !edge.touches(mv.from) || !edge.touches(mv.to) || mv.from == mv.to {
                return Err(format!("plan move {:?} does not fit honored edge {edge}", mv));
            }
            let idx = mv.packet as usize - 1;
            if self.location.len() <= idx {
                self.location.resize(idx + 1, PlanLocation::AtSender);
            }
            match (self.location[idx], mv.from) {
                (PlanLocation::AtSender, SENDER) => {}
                (PlanLocation::At(at), from) if at == from => {
                    self.loads[from as usize - 1] -= 1;
                }
                (loc, from) => {
                    return Err(format!("packet {} not at {from} (found {loc:?})", mv.packet));
                }
            }
            if mv.to == receiver {
                self.location[idx] = PlanLocation::Delivered;
                self.delivered += 1;
            } else if mv.to == SENDER {
                return Err(format!("plan moves packet {} back into the sender", mv.packet));
            } else {
                self.location[idx] = PlanLocation::At(mv.to);
                self.loads[mv.to as usize - 1] += 1;
            }
            recs.push(MoveRec { packet: mv.packet, from: mv.from, to: mv.to, from_pos: None, to_pos: None });
        }
        for (i, &load) in self.loads.iter().enumerate() {
            if load > self.capacity {
                return Err(format!("node {} exceeds capacity after round {round}", i + 1));
            }
        }
        Ok(recs)
    }
}

/// Exhaustive search over all per-round movement choices; the independent
/// check for `max_delivery` on small instances.
///
/// Moves into the sender and out of the receiver are never explored: the
/// sender's supply is unbounded (parking adds nothing) and arrivals at the
/// receiver are already counted, so neither can increase deliveries.
pub fn brute_force_delivery(schedule: &Schedule, cfg: &NetworkConfig, x: u64) -> Result<u64, String> {
    if cfg.n > 4 || x > 12 {
        return Err(format!("instance too large for exhaustive search (n = {}, x = {x})", cfg.n));
    }
    if cfg.capacity > 255 {
        return Err("exhaustive search packs heights into bytes; capacity above 255".into());
    }
    if x as usize > schedule.edges.len() {
        return Err("schedule shorter than requested horizon".into());
    }
    let mut memo: HashMap<u64, u64> = HashMap::new();
    let heights = [0u8; 2];
    Ok(search(schedule, cfg, 0, x as usize, heights, &mut memo))
}

fn encode(idx: usize, heights: [u8; 2]) -> u64 {
    (idx as u64) | ((heights[0] as u64) << 16) | ((heights[1] as u64) << 32)
}

fn search(
    schedule: &Schedule,
    cfg: &NetworkConfig,
    idx: usize,
    horizon: usize,
    heights: [u8; 2],
    memo: &mut HashMap<u64, u64>,
) -> u64 {
    if idx == horizon {
        return 0;
    }
    let key = encode(idx, heights);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let receiver = cfg.n - 1;
    let (a, b) = schedule.edges[idx].endpoints();
    let mut best = search(schedule, cfg, idx + 1, horizon, heights, memo);
    for (from, to) in [(a, b), (b, a)] {
        if from == receiver || to == SENDER {
            continue;
        }
        let has_packet = from == SENDER || heights[from as usize - 1] > 0;
        if !has_packet {
            continue;
        }
        let mut h = heights;
        if from != SENDER {
            h[from as usize - 1] -= 1;
        }
        let gain = if to == receiver {
            1
        } else {
            if heights[to as usize - 1] as u64 >= cfg.capacity {
                continue;
            }
            h[to as usize - 1] += 1;
            0
        };
        best = best.max(gain + search(schedule, cfg, idx + 1, horizon, h, memo));
    }
    memo.insert(key, best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Mode, ProtocolKind};

    fn plan_cfg(n: u32, c: u64) -> NetworkConfig {
        NetworkConfig::new(n, c, Mode::SemiAsync, ProtocolKind::OfflinePlan)
    }

    /// Rounds alternating E(S, A), E(A, R) in a 3-node line. The node count
    /// is below the simulator's minimum, but the oracle itself has no such
    /// restriction.
    fn alternating(k: u64) -> Schedule {
        let mut edges = Vec::new();
        for _ in 0..k {
            edges.push(Edge::new(0, 1));
            edges.push(Edge::new(1, 2));
        }
        Schedule::new(3, edges)
    }

    #[test]
    fn no_receiver_contact_means_zero() {
        let cfg = plan_cfg(4, 8);
        let edges = vec![Edge::new(0, 1), Edge::new(1, 2), Edge::new(0, 2)];
        let s = Schedule::new(4, edges);
        assert_eq!(max_delivery(&s, &cfg, 3), 0);
    }

    #[test]
    fn direct_edge_delivers_one() {
        let cfg = plan_cfg(4, 8);
        let s = Schedule::new(4, vec![Edge::new(0, 3)]);
        assert_eq!(max_delivery(&s, &cfg, 1), 1);
        assert_eq!(brute_force_delivery(&s, &cfg, 1).unwrap(), 1);
    }

    #[test]
    fn empty_horizon_delivers_nothing() {
        let cfg = plan_cfg(4, 8);
        let s = Schedule::new(4, vec![Edge::new(0, 3)]);
        assert_eq!(max_delivery(&s, &cfg, 0), 0);
        assert_eq!(brute_force_delivery(&s, &cfg, 0).unwrap(), 0);
        let empty = Schedule::new(4, Vec::new());
        assert_eq!(brute_force_delivery(&empty, &cfg, 0).unwrap(), 0);
    }

    #[test]
    fn alternating_line_delivers_k() {
        let cfg = plan_cfg(3, 2);
        for k in 1..=5 {
            let s = alternating(k);
            let flow = max_delivery(&s, &cfg, 2 * k);
            let brute = brute_force_delivery(&s, &cfg, 2 * k).unwrap();
            assert_eq!(flow, k, "flow at k = {k}");
            assert_eq!(brute, k, "brute at k = {k}");
        }
    }

    #[test]
    fn alternating_plan_moves_packet_k_at_its_two_rounds() {
        let cfg = plan_cfg(3, 2);
        let s = alternating(4);
        let plan = compute_plan(&s, &cfg, 8).unwrap();
        assert_eq!(plan.value, 4);
        for k in 1..=4u64 {
            let hops = &plan.itineraries[k as usize - 1];
            assert_eq!(hops.len(), 2);
            assert_eq!(hops[0], (2 * k - 1, 0, 1));
            assert_eq!(hops[1], (2 * k, 1, 2));
        }
    }

    #[test]
    fn empty_flow_gives_empty_plan() {
        let cfg = plan_cfg(4, 8);
        let s = Schedule::new(4, vec![Edge::new(1, 2)]);
        let plan = compute_plan(&s, &cfg, 1).unwrap();
        assert_eq!(plan.value, 0);
        assert!(plan.itineraries.is_empty());
        assert!(plan.moves_at(1).is_empty());
    }

    #[test]
    fn executing_a_plan_delivers_its_value() {
        let cfg = plan_cfg(4, 4);
        let s = Schedule::random(4, 33, 60);
        let x = 60;
        let plan = compute_plan(&s, &cfg, x).unwrap();
        let mut exec = PlanExecutor::new(&cfg);
        for (i, &e) in s.edges.iter().enumerate() {
            exec.apply_round(i as u64 + 1, e, &plan).unwrap();
        }
        assert_eq!(exec.delivered(), plan.value);
        assert_eq!(plan.value, max_delivery(&s, &cfg, x));
    }

    #[test]
    fn checkpoint_values_are_monotone_and_match_fresh_solves() {
        let cfg = plan_cfg(4, 4);
        let s = Schedule::random(4, 5, 40);
        let mut solver = OracleSolver::new(&s, &cfg);
        let mut prev = 0;
        for x in [10u64, 20, 30, 40] {
            let v = solver.max_delivery_by(x);
            assert!(v >= prev);
            assert_eq!(v, max_delivery(&s, &cfg, x), "checkpoint {x}");
            prev = v;
        }
    }

    #[test]
    fn oracle_matches_exhaustive_search_on_random_instances() {
        let mut rng = crate::rng::Rng::new(99);
        for case in 0..60 {
            let n = 3 + (case % 2) as u32;
            let c = 1 + rng.below(3);
            let cfg = plan_cfg(n, c);
            let rounds = 1 + rng.below(10);
            let s = Schedule::random(n, rng.next_u64(), rounds);
            let flow = max_delivery(&s, &cfg, rounds);
            let brute = brute_force_delivery(&s, &cfg, rounds).unwrap();
            assert_eq!(flow, brute, "case {case}: n={n} c={c} rounds={rounds}");
        }
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let cfg = plan_cfg(4, 8);
        let s = Schedule::random(4, 1, 20);
        assert!(brute_force_delivery(&s, &cfg, 20).is_err());
    }
}
