//! Trace invariant scanners and randomized property suites.
//!
//! Everything here re-derives its verdicts from recorded traces or from
//! freshly generated inputs; nothing trusts the engine internals it checks.

use std::collections::BTreeMap;

use crate::adversary::RandomAdversary;
use crate::config::{Mode, NetworkConfig, NodeId, ProtocolKind, SENDER};
use crate::net::run;
use crate::oracle::{brute_force_delivery, compute_plan, max_delivery, PlanExecutor};
use crate::potential::family::{
    effectual_heights, exhaustive_partition, node_potentials, partition_families,
};
use crate::rng::Rng;
use crate::schedule::{Edge, Schedule};
use crate::trace::{PacketId, Trace};

/// A failed check, pinned to the first offending round.
#[derive(Debug, Clone)]
pub struct Violation {
    pub round: u64,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "round {}: {}", self.round, self.message)
    }
}

impl std::error::Error for Violation {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Location {
    Node(NodeId),
    Received,
}

/// Summary of a clean invariant scan.
#[derive(Debug, Clone, Default)]
pub struct ScanStats {
    pub rounds: u64,
    pub inserted: u64,
    pub delivered: u64,
    pub transfers: u64,
    /// Smallest observed per-transfer position drop, if any transfer ran.
    pub min_drop: Option<i64>,
    pub max_transfers_per_packet: u32,
}

/// Replays a trace's movements through an independent custody model and
/// checks conservation, capacity, height bookkeeping, per-transfer drops,
/// and per-packet transfer counts.
///
/// Drop accounting is mode specific: semi-asynchronous transfers must fall
/// by at least C/n - 1 in stack position (heights are current), fully
/// asynchronous ones by at least C/n - 4n (recorded commit and landing
/// positions).
pub fn invariant_scan(trace: &Trace) -> Result<ScanStats, Violation> {
    let cfg = trace.config();
    let n = cfg.n;
    let share = cfg.share() as i64;
    let receiver = cfg.receiver();
    let max_transfers = 2 * n;
    let mut location: BTreeMap<PacketId, Location> = BTreeMap::new();
    let mut heights = vec![0u64; cfg.internal_count()];
    let mut transfer_counts: BTreeMap<PacketId, u32> = BTreeMap::new();
    let mut stats = ScanStats::default();
    let mut prev = (0u64, 0u64, 0u64);

    for rec in &trace.records {
        let round = rec.round;
        let fail = |message: String| Violation { round, message };
        let pre_heights = heights.clone();
        let (mut y, mut z, mut t) = prev;
        for mv in &rec.moves {
            if !(mv.from == rec.edge.0 || mv.from == rec.edge.1) || !(mv.to == rec.edge.0 || mv.to == rec.edge.1) {
                return Err(fail(format!("move {mv:?} off the honored edge {:?}", rec.edge)));
            }
            // Custody out.
            if mv.from == SENDER {
                if location.contains_key(&mv.packet) {
                    return Err(fail(format!("packet {} inserted twice", mv.packet)));
                }
                y += 1;
            } else {
                if location.get(&mv.packet) != Some(&Location::Node(mv.from)) {
                    return Err(fail(format!("packet {} not held by node {}", mv.packet, mv.from)));
                }
                heights[mv.from as usize - 1] -= 1;
            }
            // Custody in.
            if mv.to == receiver {
                z += 1;
                location.insert(mv.packet, Location::Received);
            } else {
                if heights[mv.to as usize - 1] >= cfg.capacity {
                    return Err(fail(format!("node {} over capacity", mv.to)));
                }
                heights[mv.to as usize - 1] += 1;
                location.insert(mv.packet, Location::Node(mv.to));
            }
            // Transfer-specific accounting.
            if mv.is_transfer(n) {
                t += 1;
                let count = transfer_counts.entry(mv.packet).or_insert(0);
                *count += 1;
                if *count > max_transfers {
                    return Err(fail(format!(
                        "packet {} transferred {} times (limit {max_transfers})",
                        mv.packet, count
                    )));
                }
                stats.max_transfers_per_packet = stats.max_transfers_per_packet.max(*count);
                let drop = match cfg.mode {
                    Mode::SemiAsync => {
                        // Position H at the source, lands at position h + 1.
                        pre_heights[mv.from as usize - 1] as i64 - (pre_heights[mv.to as usize - 1] as i64 + 1)
                    }
                    Mode::FullyAsync => {
                        let (Some(fp), Some(tp)) = (mv.from_pos, mv.to_pos) else {
                            return Err(fail(format!("transfer of packet {} lacks positions", mv.packet)));
                        };
                        fp as i64 - tp as i64
                    }
                };
                let floor = match cfg.mode {
                    Mode::SemiAsync => share - 1,
                    Mode::FullyAsync => share - 4 * n as i64,
                };
                if drop < floor {
                    return Err(fail(format!(
                        "transfer of packet {} dropped {drop}, below {floor}",
                        mv.packet
                    )));
                }
                stats.min_drop = Some(stats.min_drop.map_or(drop, |d| d.min(drop)));
            }
        }
        // Recorded bookkeeping must match the replayed model.
        for id in cfg.internal_ids() {
            if rec.heights[id as usize] != heights[id as usize - 1] {
                return Err(fail(format!(
                    "recorded height of node {id} is {}, replay says {}",
                    rec.heights[id as usize],
                    heights[id as usize - 1]
                )));
            }
        }
        if (rec.y, rec.z, rec.t) != (y, z, t) {
            return Err(fail(format!(
                "recorded counters ({}, {}, {}) disagree with replay ({y}, {z}, {t})",
                rec.y, rec.z, rec.t
            )));
        }
        if t > 2 * n as u64 * y {
            return Err(fail(format!("transfers {t} exceed 2n * insertions {}", 2 * n as u64 * y)));
        }
        let held: u64 = heights.iter().sum();
        if y != held + z {
            return Err(fail(format!("conservation broken: {y} inserted, {held} held + {z} delivered")));
        }
        if cfg.mode == Mode::FullyAsync {
            let ghosts = rec.ghosts.as_ref().ok_or_else(|| fail("missing ghost gauge".into()))?;
            let outstanding = rec.outstanding.as_ref().ok_or_else(|| fail("missing request gauge".into()))?;
            for (i, (&g, &o)) in ghosts.iter().zip(outstanding.iter()).enumerate() {
                if g > n || o > n {
                    return Err(fail(format!("node {} gauges out of bound: {g} ghosts, {o} requests", i + 1)));
                }
            }
            if rec.max_queue.unwrap_or(0) > 1 {
                return Err(fail(format!("pending queue length {}", rec.max_queue.unwrap())));
            }
        }
        prev = (y, z, t);
    }
    stats.rounds = trace.records.len() as u64;
    stats.inserted = prev.0;
    stats.delivered = prev.1;
    stats.transfers = prev.2;
    Ok(stats)
}

/// Runs the slide protocol against a seeded random schedule and scans it.
pub fn slide_invariant_suite(n: u32, capacity: u64, seed: u64, rounds: u64) -> Result<ScanStats, String> {
    let cfg = NetworkConfig::new(n, capacity, Mode::SemiAsync, ProtocolKind::Slide);
    let mut adv = RandomAdversary::new(n, seed);
    let trace = run(&cfg, &mut adv, rounds).map_err(|e| e.to_string())?;
    invariant_scan(&trace).map_err(|v| v.to_string())
}

/// Runs slide-plus on a random schedule, replays the emitted schedule file,
/// and scans both traces (they must be identical).
pub fn slide_plus_invariant_suite(n: u32, capacity: u64, seed: u64, rounds: u64) -> Result<ScanStats, String> {
    let cfg = NetworkConfig::new(n, capacity, Mode::FullyAsync, ProtocolKind::SlidePlus);
    let mut adv = RandomAdversary::new(n, seed);
    let trace = run(&cfg, &mut adv, rounds).map_err(|e| e.to_string())?;
    let text = trace.schedule().to_text();
    let replayed = Schedule::parse(&text, n).map_err(|e| e.to_string())?;
    let mut replay_adv = crate::adversary::ReplayAdversary::new(replayed);
    let trace2 = run(&cfg, &mut replay_adv, rounds).map_err(|e| e.to_string())?;
    if trace.records != trace2.records {
        return Err("replayed schedule produced a different trace".into());
    }
    invariant_scan(&trace).map_err(|v| v.to_string())
}

/// Summary of replay-verified slide-plus transfer drops.
#[derive(Debug, Clone, Default)]
pub struct DropAudit {
    pub transfers: u64,
    /// Smallest observed (commit position - landing position).
    pub min_drop: Option<i64>,
    /// Largest observed per-transfer position rise (negative drop), if any.
    pub max_rise: Option<i64>,
    pub max_transfers_per_packet: u32,
}

/// Replays a fully asynchronous trace's schedule through a fresh engine,
/// requires the regenerated records (positions recomputed from slot states)
/// to match, and audits every transfer's position drop against the
/// C/n - 4n floor.
pub fn audit_transfer_drops(trace: &Trace) -> Result<DropAudit, String> {
    let cfg = trace.config();
    if cfg.mode != Mode::FullyAsync {
        return Err("the drop audit applies to fully asynchronous traces".into());
    }
    let mut net = crate::net::FullyAsyncNet::new(cfg);
    let mut audit = DropAudit::default();
    let mut counts: BTreeMap<PacketId, u32> = BTreeMap::new();
    let floor = cfg.share() as i64 - 4 * cfg.n as i64;
    for rec in &trace.records {
        let regenerated = net
            .step(rec.round, Edge::new(rec.edge.0, rec.edge.1))
            .map_err(|e| e.to_string())?;
        if regenerated != *rec {
            return Err(format!("round {}: replayed record disagrees with the trace", rec.round));
        }
        for mv in &rec.moves {
            if !mv.is_transfer(cfg.n) {
                continue;
            }
            let (Some(fp), Some(tp)) = (mv.from_pos, mv.to_pos) else {
                return Err(format!("round {}: transfer without positions", rec.round));
            };
            let drop = fp as i64 - tp as i64;
            if drop < floor {
                return Err(format!(
                    "round {}: packet {} dropped {drop}, below {floor}",
                    rec.round, mv.packet
                ));
            }
            audit.transfers += 1;
            audit.min_drop = Some(audit.min_drop.map_or(drop, |d| d.min(drop)));
            if drop < 0 {
                audit.max_rise = Some(audit.max_rise.map_or(-drop, |r| r.max(-drop)));
            }
            let c = counts.entry(mv.packet).or_insert(0);
            *c += 1;
            audit.max_transfers_per_packet = audit.max_transfers_per_packet.max(*c);
        }
    }
    Ok(audit)
}

#[derive(Debug, Clone, Default)]
pub struct FamilySweepStats {
    pub samples: u64,
    pub exhaustively_checked: u64,
}

/// Random height vectors through the family machinery, checking the
/// structural lemmas: potentials sum to the cumulative effectual height,
/// families are contiguous with strictly increasing averages, close heights
/// share a family, and (for small vectors) the greedy partition matches the
/// exhaustive minimizer.
pub fn family_property_sweep(seed: u64, samples: u64) -> Result<FamilySweepStats, String> {
    let mut rng = Rng::new(seed);
    let mut stats = FamilySweepStats::default();
    for sample in 0..samples {
        let n = 4 + rng.below(9) as u32; // 4..=12
        let share = 2 + rng.below(9); // C/n in 2..=10
        let capacity = share * n as u64;
        let m = n as usize - 2;
        let heights_by_node: Vec<u64> = (0..m).map(|_| rng.below(capacity + 1)).collect();
        let ctx = || format!("sample {sample}: n={n} C={capacity} heights={heights_by_node:?}");

        let mut sorted = heights_by_node.clone();
        sorted.sort_unstable();
        let eff = effectual_heights(&sorted, share);
        let families = partition_families(&eff);
        let phi = node_potentials(&families);

        // Contiguous cover of 1..=m in order.
        let mut expect_lo = 1usize;
        for fam in &families {
            if fam.lo != expect_lo || fam.hi < fam.lo || fam.hi > m {
                return Err(format!("{}: families not contiguous: {families:?}", ctx()));
            }
            expect_lo = fam.hi + 1;
        }
        if expect_lo != m + 1 {
            return Err(format!("{}: families do not cover all labels", ctx()));
        }
        // Potentials sum to the family cumulative, each within one of the floor.
        for fam in &families {
            let sum: u64 = phi[fam.lo - 1..fam.hi].iter().sum();
            if sum != fam.cumulative {
                return Err(format!("{}: potential sum {sum} != cumulative {}", ctx(), fam.cumulative));
            }
            for label in fam.lo..=fam.hi {
                if phi[label - 1] != fam.floor_avg && phi[label - 1] != fam.floor_avg + 1 {
                    return Err(format!("{}: potential off the floor at label {label}", ctx()));
                }
            }
        }
        // Family averages strictly increase.
        for pair in families.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.cumulative as u128 * b.len() as u128 >= b.cumulative as u128 * a.len() as u128 {
                return Err(format!("{}: family averages not strictly increasing", ctx()));
            }
        }
        // Rank-discount comparisons between labels.
        for i in 0..m {
            for j in i + 1..m {
                if sorted[i] + share >= sorted[j] && eff[i] < eff[j] {
                    return Err(format!("{}: close heights but effectual order broken ({i}, {j})", ctx()));
                }
                if sorted[i] + (j - i) as u64 * share < sorted[j] && eff[j] > 0 && eff[i] >= eff[j] {
                    return Err(format!("{}: far heights but discounts not separating ({i}, {j})", ctx()));
                }
            }
        }
        let same_family = |a: usize, b: usize| {
            families.iter().any(|f| f.lo <= a + 1 && a < f.hi && f.lo <= b + 1 && b < f.hi)
        };
        // Non-increasing effectual heights glue adjacent labels together.
        for j in 0..m - 1 {
            if eff[j + 1] <= eff[j] && !same_family(j, j + 1) {
                return Err(format!("{}: adjacent labels {j} and {} split a family", ctx(), j + 1));
            }
        }
        // Heights within C/n share a family.
        for i in 0..m {
            for j in i + 1..m {
                if sorted[j] - sorted[i] <= share && !same_family(i, j) {
                    return Err(format!("{}: labels {i} and {j} within C/n but split", ctx()));
                }
            }
        }
        // Exhaustive minimality oracle for small vectors.
        if m <= 6 {
            let reference = exhaustive_partition(&eff);
            if reference != families {
                return Err(format!("{}: greedy {families:?} != exhaustive {reference:?}", ctx()));
            }
            stats.exhaustively_checked += 1;
        }
        stats.samples += 1;
    }
    Ok(stats)
}

#[derive(Debug, Clone, Default)]
pub struct OracleEquivStats {
    pub exhaustive_cases: u64,
    pub random_cases: u64,
}

/// Flow oracle versus exhaustive search: every 3-node schedule up to
/// `exhaustive_len` rounds, plus seeded random 4-node schedules, checking
/// the delivery count and that executing the decomposed plan realizes it.
pub fn oracle_equivalence_sweep(
    exhaustive_len: u64,
    random_cases: u64,
    random_len: u64,
    seed: u64,
) -> Result<OracleEquivStats, String> {
    let mut stats = OracleEquivStats::default();
    let line_edges = [Edge::new(0, 1), Edge::new(0, 2), Edge::new(1, 2)];
    for capacity in [1u64, 2] {
        let cfg = NetworkConfig::new(3, capacity, Mode::SemiAsync, ProtocolKind::OfflinePlan);
        for len in 1..=exhaustive_len {
            let mut pick = vec![0usize; len as usize];
            loop {
                let schedule = Schedule::new(3, pick.iter().map(|&i| line_edges[i]).collect());
                check_equivalence(&schedule, &cfg, len)?;
                stats.exhaustive_cases += 1;
                // Next base-3 selection.
                let mut pos = 0;
                loop {
                    if pos == pick.len() {
                        break;
                    }
                    pick[pos] += 1;
                    if pick[pos] < 3 {
                        break;
                    }
                    pick[pos] = 0;
                    pos += 1;
                }
                if pos == pick.len() {
                    break;
                }
            }
        }
    }
    let mut rng = Rng::new(seed);
    for _ in 0..random_cases {
        let capacity = 1 + rng.below(3);
        let cfg = NetworkConfig::new(4, capacity, Mode::SemiAsync, ProtocolKind::OfflinePlan);
        let len = 1 + rng.below(random_len);
        let schedule = Schedule::random(4, rng.next_u64(), len);
        check_equivalence(&schedule, &cfg, len)?;
        stats.random_cases += 1;
    }
    Ok(stats)
}

fn check_equivalence(schedule: &Schedule, cfg: &NetworkConfig, x: u64) -> Result<(), String> {
    let flow = max_delivery(schedule, cfg, x);
    let brute = brute_force_delivery(schedule, cfg, x)?;
    if flow != brute {
        return Err(format!(
            "oracle {flow} != exhaustive {brute} on n={} C={} schedule {:?}",
            cfg.n, cfg.capacity, schedule.edges
        ));
    }
    let plan = compute_plan(schedule, cfg, x)?;
    let mut exec = PlanExecutor::new(cfg);
    for (i, &e) in schedule.edges.iter().take(x as usize).enumerate() {
        exec.apply_round(i as u64 + 1, e, &plan).map_err(|m| format!("plan execution: {m}"))?;
    }
    if exec.delivered() != flow {
        return Err(format!("plan delivered {} but flow value is {flow}", exec.delivered()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_slide_run_passes_the_scan() {
        let stats = slide_invariant_suite(8, 64, 42, 2000).unwrap();
        assert_eq!(stats.rounds, 2000);
        assert!(stats.inserted > 0);
        if let Some(d) = stats.min_drop {
            assert!(d >= 7);
        }
    }

    #[test]
    fn corrupted_trace_is_caught_with_its_round() {
        let cfg = NetworkConfig::new(8, 64, Mode::SemiAsync, ProtocolKind::Slide);
        let mut adv = RandomAdversary::new(8, 9);
        let mut trace = run(&cfg, &mut adv, 500).unwrap();
        // Tamper with one recorded height.
        trace.records[250].heights[2] += 1;
        let v = invariant_scan(&trace).unwrap_err();
        assert_eq!(v.round, 251);
        assert!(v.message.contains("height"), "{v}");
    }

    #[test]
    fn family_sweep_small_smoke() {
        let stats = family_property_sweep(3, 300).unwrap();
        assert_eq!(stats.samples, 300);
        assert!(stats.exhaustively_checked > 0);
    }

    #[test]
    fn drop_audit_replays_and_bounds() {
        let cfg = NetworkConfig::new(4, 128, Mode::FullyAsync, ProtocolKind::SlidePlus);
        let mut adv = RandomAdversary::new(4, 31);
        let trace = run(&cfg, &mut adv, 5000).unwrap();
        let audit = audit_transfer_drops(&trace).unwrap();
        if audit.transfers > 0 {
            assert!(audit.min_drop.unwrap() >= 16);
            assert!(audit.max_rise.is_none(), "no transfer may climb");
        }
        assert!(audit.max_transfers_per_packet <= 8);
        // An empty trace audits vacuously.
        let empty = Trace { meta: trace.meta.clone(), records: Vec::new() };
        let vac = audit_transfer_drops(&empty).unwrap();
        assert_eq!(vac.transfers, 0);
        assert_eq!(vac.min_drop, None);
    }

    #[test]
    fn oracle_equivalence_small_smoke() {
        let stats = oracle_equivalence_sweep(4, 50, 8, 12).unwrap();
        assert_eq!(stats.exhaustive_cases, 2 * (3 + 9 + 27 + 81));
        assert_eq!(stats.random_cases, 50);
    }
}
