//! Co-simulation: the online protocol and the offline plan run side by side
//! on one schedule, feeding delivery classification and the potential
//! ledgers.

use crate::config::{NetworkConfig, ProtocolKind};
use crate::net::{FullyAsyncNet, SemiAsyncNet, SimError};
use crate::oracle::{OfflinePlan, PlanExecutor};
use crate::schedule::{Edge, Schedule};
use crate::trace::{DecisionRec, MoveRec};

/// One round of the co-simulation.
#[derive(Debug, Clone)]
pub struct DualRound {
    pub edge: Edge,
    /// Online-world internal heights at the round start.
    pub heights_start: Vec<u64>,
    pub online_moves: Vec<MoveRec>,
    pub decision: Option<DecisionRec>,
    pub plan_moves: Vec<MoveRec>,
}

/// The record both worlds produce on an identical schedule.
#[derive(Debug, Clone)]
pub struct DualRunTrace {
    pub cfg: NetworkConfig,
    pub plan: OfflinePlan,
    pub rounds: Vec<DualRound>,
    /// Online-world internal heights after the last round.
    pub final_heights: Vec<u64>,
    pub online_delivered: u64,
    pub online_inserted: u64,
    pub online_transfers: u64,
}

impl DualRunTrace {
    pub fn rounds_total(&self) -> u64 {
        self.rounds.len() as u64
    }

    /// Internal heights in the online world after round `r` (1-based).
    pub fn heights_after(&self, r: u64) -> &[u64] {
        if (r as usize) < self.rounds.len() {
            &self.rounds[r as usize].heights_start
        } else {
            &self.final_heights
        }
    }

    /// Cumulative online deliveries, index `r - 1` for round `r`.
    pub fn online_delivered_series(&self) -> Vec<u64> {
        let n = self.cfg.n;
        let mut z = 0;
        self.rounds
            .iter()
            .map(|rd| {
                z += rd.online_moves.iter().filter(|m| m.is_delivery(n)).count() as u64;
                z
            })
            .collect()
    }

    /// Cumulative online insertions.
    pub fn online_inserted_series(&self) -> Vec<u64> {
        let mut y = 0;
        self.rounds
            .iter()
            .map(|rd| {
                y += rd.online_moves.iter().filter(|m| m.is_insertion()).count() as u64;
                y
            })
            .collect()
    }

    /// Cumulative plan deliveries.
    pub fn plan_delivered_series(&self) -> Vec<u64> {
        let n = self.cfg.n;
        let mut z = 0;
        self.rounds
            .iter()
            .map(|rd| {
                z += rd.plan_moves.iter().filter(|m| m.is_delivery(n)).count() as u64;
                z
            })
            .collect()
    }
}

enum OnlineNet {
    Semi(SemiAsyncNet),
    Fully(FullyAsyncNet),
}

/// Runs the configured online protocol and the plan on the same schedule.
///
/// The plan must have been computed for this schedule (its horizon bounds
/// the replayable rounds).
pub fn dual_run(cfg: &NetworkConfig, schedule: &Schedule, plan: &OfflinePlan) -> Result<DualRunTrace, SimError> {
    cfg.validate()?;
    if schedule.rounds() > plan.horizon {
        return Err(SimError::BadArg(format!(
            "plan horizon {} shorter than schedule {}",
            plan.horizon,
            schedule.rounds()
        )));
    }
    let mut online = match cfg.protocol {
        ProtocolKind::Slide => OnlineNet::Semi(SemiAsyncNet::new(*cfg)),
        ProtocolKind::SlidePlus => OnlineNet::Fully(FullyAsyncNet::new(*cfg)),
        ProtocolKind::OfflinePlan => {
            return Err(SimError::BadArg("the online side must be slide or slide-plus".into()))
        }
    };
    let mut exec = PlanExecutor::new(cfg);
    let mut rounds = Vec::with_capacity(schedule.edges.len());
    for (i, &edge) in schedule.edges.iter().enumerate() {
        let round = i as u64 + 1;
        let heights_start = match &online {
            OnlineNet::Semi(net) => net.internal_heights(),
            OnlineNet::Fully(net) => net.internal_heights(),
        };
        let rec = match &mut online {
            OnlineNet::Semi(net) => net.step(round, edge)?,
            OnlineNet::Fully(net) => net.step(round, edge)?,
        };
        let plan_moves = exec
            .apply_round(round, edge, plan)
            .map_err(|message| SimError::Fault { round, message })?;
        rounds.push(DualRound {
            edge,
            heights_start,
            online_moves: rec.moves,
            decision: rec.decision,
            plan_moves,
        });
    }
    let (final_heights, (y, z, t)) = match &online {
        OnlineNet::Semi(net) => (net.internal_heights(), net.counts()),
        OnlineNet::Fully(net) => (net.internal_heights(), net.counts()),
    };
    Ok(DualRunTrace {
        cfg: *cfg,
        plan: plan.clone(),
        rounds,
        final_heights,
        online_delivered: z,
        online_inserted: y,
        online_transfers: t,
    })
}
