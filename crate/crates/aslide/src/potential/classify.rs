//! Delivery classification for dual runs.
//!
//! Every packet the offline plan delivers falls in exactly one class:
//!
//! - `CoMoved` (z1): some hop shared a round with an online packet movement;
//! - `Fresh` (z2): never co-moved, and every hop's decision heights were
//!   within n of the endpoints' current heights (semi-asynchronous rounds
//!   are always fresh, as is a first honoring, where no recorded heights
//!   exist and the online protocol cannot act);
//! - `Stale` (z3): the remainder. Each stale delivery carries a witness set
//!   of n online movements incident to the stale hop's endpoints between
//!   the two honorings that framed it.

use std::collections::BTreeMap;

use crate::config::Mode;
use crate::dual::DualRunTrace;
use crate::trace::{MoveRec, PacketId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryClass {
    CoMoved,
    Fresh,
    Stale,
}

/// An online movement cited as evidence for a stale hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WitnessMove {
    pub round: u64,
    pub mv: MoveRec,
}

#[derive(Debug, Clone, Default)]
pub struct Classification {
    pub co_moved: Vec<PacketId>,
    pub fresh: Vec<PacketId>,
    pub stale: Vec<PacketId>,
    pub class_of: BTreeMap<PacketId, DeliveryClass>,
    pub delivery_round: BTreeMap<PacketId, u64>,
    /// Exactly n online movements per stale delivery.
    pub witnesses: BTreeMap<PacketId, Vec<WitnessMove>>,
}

impl Classification {
    /// Class sizes among packets delivered by the end of round `x`:
    /// (co-moved, fresh, stale).
    pub fn sizes_by(&self, x: u64) -> (u64, u64, u64) {
        let mut sizes = (0, 0, 0);
        for (p, &r) in &self.delivery_round {
            if r <= x {
                match self.class_of[p] {
                    DeliveryClass::CoMoved => sizes.0 += 1,
                    DeliveryClass::Fresh => sizes.1 += 1,
                    DeliveryClass::Stale => sizes.2 += 1,
                }
            }
        }
        sizes
    }
}

/// Classifies every delivered plan packet of a dual run.
pub fn classify_deliveries(dual: &DualRunTrace) -> Result<Classification, String> {
    let n = dual.cfg.n;
    let rounds = dual.rounds.len();
    let online_moved: Vec<bool> = dual.rounds.iter().map(|r| !r.online_moves.is_empty()).collect();
    let fresh_round: Vec<bool> = dual
        .rounds
        .iter()
        .map(|r| match &r.decision {
            None => true,
            Some(d) => d.fresh_within(n as i64),
        })
        .collect();

    let mut out = Classification::default();
    for (idx, hops) in dual.plan.itineraries.iter().enumerate() {
        let packet = idx as u64 + 1;
        let delivery = hops
            .iter()
            .find(|&&(_, _, to)| to == n - 1)
            .map(|&(r, _, _)| r)
            .ok_or_else(|| format!("plan packet {packet} has no delivery hop"))?;
        out.delivery_round.insert(packet, delivery);

        let co_moved = hops.iter().any(|&(r, _, _)| online_moved[r as usize - 1]);
        if co_moved {
            out.co_moved.push(packet);
            out.class_of.insert(packet, DeliveryClass::CoMoved);
            continue;
        }
        let stale_hop = hops.iter().find(|&&(r, _, _)| !fresh_round[r as usize - 1]).copied();
        match stale_hop {
            None => {
                out.fresh.push(packet);
                out.class_of.insert(packet, DeliveryClass::Fresh);
            }
            Some((hop_round, u, v)) => {
                let witnesses = collect_witnesses(dual, hop_round, u, v, rounds)?;
                out.witnesses.insert(packet, witnesses);
                out.stale.push(packet);
                out.class_of.insert(packet, DeliveryClass::Stale);
            }
        }
    }
    if dual.cfg.mode == Mode::SemiAsync && !out.stale.is_empty() {
        return Err(format!(
            "semi-asynchronous heights are always current, yet {} deliveries classified stale",
            out.stale.len()
        ));
    }
    Ok(out)
}

/// Finds n online movements incident to the stale hop's endpoints, strictly
/// between the previous honoring of the edge and the hop round.
fn collect_witnesses(
    dual: &DualRunTrace,
    hop_round: u64,
    u: u32,
    v: u32,
    _rounds: usize,
) -> Result<Vec<WitnessMove>, String> {
    let n = dual.cfg.n as usize;
    let edge = dual.rounds[hop_round as usize - 1].edge;
    let prev_honoring = (1..hop_round)
        .rev()
        .find(|&r| dual.rounds[r as usize - 1].edge == edge)
        .ok_or_else(|| format!("stale hop at round {hop_round} has no previous honoring"))?;
    let mut witnesses = Vec::with_capacity(n);
    for r in prev_honoring + 1..hop_round {
        for mv in &dual.rounds[r as usize - 1].online_moves {
            if mv.from == u || mv.to == u || mv.from == v || mv.to == v {
                witnesses.push(WitnessMove { round: r, mv: *mv });
                if witnesses.len() == n {
                    return Ok(witnesses);
                }
            }
        }
    }
    Err(format!(
        "stale hop at round {hop_round} (edge {edge}) backed by only {} incident movements",
        witnesses.len()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{NetworkConfig, ProtocolKind};
    use crate::dual::dual_run;
    use crate::oracle::compute_plan;
    use crate::schedule::Schedule;

    #[test]
    fn empty_plan_gives_empty_classes() {
        let cfg = NetworkConfig::new(4, 16, Mode::SemiAsync, ProtocolKind::Slide);
        // One internal-only round: the plan cannot deliver anything.
        let schedule = Schedule::new(4, vec![crate::schedule::Edge::new(1, 2)]);
        let plan = compute_plan(&schedule, &cfg, 1).unwrap();
        let dual = dual_run(&cfg, &schedule, &plan).unwrap();
        let c = classify_deliveries(&dual).unwrap();
        assert!(c.co_moved.is_empty() && c.fresh.is_empty() && c.stale.is_empty());
    }

    #[test]
    fn co_movement_on_any_hop_classifies_z1() {
        // A direct sender-receiver round always moves a packet in both
        // worlds, so the plan delivery is co-moved.
        let cfg = NetworkConfig::new(4, 16, Mode::SemiAsync, ProtocolKind::Slide);
        let schedule = Schedule::new(4, vec![crate::schedule::Edge::new(0, 3)]);
        let plan = compute_plan(&schedule, &cfg, 1).unwrap();
        assert_eq!(plan.value, 1);
        let dual = dual_run(&cfg, &schedule, &plan).unwrap();
        let c = classify_deliveries(&dual).unwrap();
        assert_eq!(c.co_moved.len(), 1);
        assert!(c.fresh.is_empty() && c.stale.is_empty());
    }

    #[test]
    fn semi_async_runs_have_no_stale_deliveries() {
        let cfg = NetworkConfig::new(4, 16, Mode::SemiAsync, ProtocolKind::Slide);
        let schedule = Schedule::random(4, 17, 600);
        let plan = compute_plan(&schedule, &cfg, 600).unwrap();
        let dual = dual_run(&cfg, &schedule, &plan).unwrap();
        let c = classify_deliveries(&dual).unwrap();
        assert!(c.stale.is_empty());
        let (z1, z2, z3) = c.sizes_by(600);
        assert_eq!(z1 + z2 + z3, plan.value);
    }
}
