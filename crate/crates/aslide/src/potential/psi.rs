//! The per-cycle potential and its delivery inequality.
//!
//! Under decreasing labels (fullest node first), the potential is the
//! geometric-weighted sum of rank-offset heights:
//!
//! ```text
//! sum over i of (1/2)^(m-i) * max(0, H_i - (m-i) * C/m),   m = n - 2
//! ```
//!
//! Against the cyclic adversary, every completed cycle must satisfy
//! `delivered + (potential after - potential before) <= 7C/m`, and hence
//! cumulative deliveries by cycle `a` stay below `7aC/m`.

use crate::adversary::decreasing_labeling;
use crate::ratio::Ratio;
use crate::trace::Trace;

/// The cycle potential over heights already sorted decreasing.
/// Evaluated in exact rationals; `capacity` is C.
pub fn cycle_potential(heights_desc: &[u64], capacity: u64) -> Ratio {
    let m = heights_desc.len() as i128;
    let mut total = Ratio::ZERO;
    for (idx, &h) in heights_desc.iter().enumerate() {
        let i = idx as i128 + 1;
        let rank = m - i; // exponent and rank offset share m - i
        let offset = Ratio::int(h as i128) - Ratio::new(rank * capacity as i128, m);
        if offset > Ratio::ZERO {
            total += Ratio::new(offset.num(), offset.den() * (1i128 << rank));
        }
    }
    total
}

/// Convenience: sorts internal heights (indexed by node id - 1) into the
/// decreasing labeling before evaluating.
pub fn cycle_potential_of(internal_heights: &[u64], capacity: u64) -> Ratio {
    let labels = decreasing_labeling(internal_heights);
    let sorted: Vec<u64> = labels.iter().map(|&id| internal_heights[id as usize - 1]).collect();
    cycle_potential(&sorted, capacity)
}

/// The cycle potential with its per-label decomposition: which labels'
/// rank-offset terms dominate the floor, and each label's (non-positive)
/// slack below it.
#[derive(Debug, Clone)]
pub struct PsiSnapshot {
    pub order: crate::potential::family::LabelOrder,
    /// Node id per 1-based label, fullest first.
    pub labels: Vec<crate::config::NodeId>,
    pub heights: Vec<u64>,
    pub psi: Ratio,
    /// True where the rank-offset term reaches the floor (contributes).
    pub dominant: Vec<bool>,
    /// min(0, H_i - (m-i) C/m) per label.
    pub slack: Vec<Ratio>,
}

impl PsiSnapshot {
    pub fn compute(internal_heights: &[u64], capacity: u64) -> PsiSnapshot {
        let labels = decreasing_labeling(internal_heights);
        let heights: Vec<u64> = labels.iter().map(|&id| internal_heights[id as usize - 1]).collect();
        let m = heights.len() as i128;
        let mut dominant = Vec::with_capacity(heights.len());
        let mut slack = Vec::with_capacity(heights.len());
        for (idx, &h) in heights.iter().enumerate() {
            let rank = m - (idx as i128 + 1);
            let offset = Ratio::int(h as i128) - Ratio::new(rank * capacity as i128, m);
            dominant.push(offset >= Ratio::ZERO);
            slack.push(offset.min(Ratio::ZERO));
        }
        PsiSnapshot {
            order: crate::potential::family::LabelOrder::Decreasing,
            psi: cycle_potential(&heights, capacity),
            labels,
            heights,
            dominant,
            slack,
        }
    }
}

/// One completed adversary cycle's inequality evaluation.
#[derive(Debug, Clone)]
pub struct CycleCheck {
    pub cycle: u64,
    pub delivered: u64,
    pub psi_start: Ratio,
    pub psi_end: Ratio,
    /// delivered + (psi_end - psi_start)
    pub lhs: Ratio,
    /// 7C/m
    pub rhs: Ratio,
    pub pass: bool,
    pub cumulative_delivered: u64,
    /// 7 * cycle * C / m
    pub cumulative_bound: Ratio,
    pub cumulative_pass: bool,
}

/// Evaluates the per-cycle inequality over every completed fixed-length
/// cycle of a trace, in exact arithmetic. The first cycle must start from
/// an empty network (zero potential).
pub fn check_cycle_inequality(trace: &Trace) -> Result<Vec<CycleCheck>, String> {
    let cfg = trace.config();
    let m = cfg.internal_count() as i128;
    let cycle_len = (cfg.n as u64 - 1) * cfg.capacity;
    let cycles = trace.records.len() as u64 / cycle_len;
    if cycles == 0 {
        return Err(format!("trace shorter than one cycle ({cycle_len} rounds)"));
    }
    let rhs = Ratio::new(7 * cfg.capacity as i128, m);
    let mut out = Vec::new();
    let mut cumulative = 0u64;
    let mut psi_start = cycle_potential_of(&trace.heights_before(1), cfg.capacity);
    if psi_start != Ratio::ZERO {
        return Err(format!("first cycle starts with potential {psi_start}, expected 0"));
    }
    for cycle in 1..=cycles {
        let end_round = cycle * cycle_len;
        let heights_end = trace.heights_before(end_round + 1);
        let psi_end = cycle_potential_of(&heights_end, cfg.capacity);
        if psi_end.is_negative() {
            return Err(format!("cycle {cycle}: negative potential {psi_end}"));
        }
        let z_start = if cycle == 1 { 0 } else { trace.records[((cycle - 1) * cycle_len) as usize - 1].z };
        let z_end = trace.records[end_round as usize - 1].z;
        let delivered = z_end - z_start;
        cumulative += delivered;
        let lhs = Ratio::int(delivered as i128) + psi_end - psi_start;
        let cumulative_bound = Ratio::new(7 * cycle as i128 * cfg.capacity as i128, m);
        out.push(CycleCheck {
            cycle,
            delivered,
            psi_start,
            psi_end,
            lhs,
            rhs,
            pass: lhs <= rhs,
            cumulative_delivered: cumulative,
            cumulative_bound,
            cumulative_pass: Ratio::int(cumulative as i128) <= cumulative_bound,
        });
        psi_start = psi_end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_network_has_zero_potential() {
        assert_eq!(cycle_potential(&[0; 6], 64), Ratio::ZERO);
    }

    #[test]
    fn single_full_node_example() {
        // n = 8, C = 60: only the fullest node carries weight:
        // (1/2)^5 * max(0, 60 - 5*60/6) = 10/32.
        let heights = [60, 0, 0, 0, 0, 0];
        assert_eq!(cycle_potential(&heights, 60), Ratio::new(10, 32));
    }

    #[test]
    fn lowest_label_contributes_without_offset() {
        // The last label has no rank offset but a (1/2)^0 weight; with all
        // heights below C/m only that term survives.
        let heights = [9, 9, 9, 9, 9, 9];
        assert_eq!(cycle_potential(&heights, 60), Ratio::int(9));
    }

    #[test]
    fn potential_is_never_negative() {
        let mut rng = crate::rng::Rng::new(8);
        for _ in 0..500 {
            let heights: Vec<u64> = (0..6).map(|_| rng.below(65)).collect();
            assert!(!cycle_potential_of(&heights, 64).is_negative());
        }
    }

    #[test]
    fn snapshot_decomposition_is_consistent() {
        let heights = [3, 60, 12, 41, 0, 25];
        let snap = PsiSnapshot::compute(&heights, 60);
        assert_eq!(snap.heights, vec![60, 41, 25, 12, 3, 0]);
        assert_eq!(snap.psi, cycle_potential_of(&heights, 60));
        for (i, s) in snap.slack.iter().enumerate() {
            assert!(*s <= Ratio::ZERO);
            // Slack is zero exactly where the offset term dominates.
            assert_eq!(*s == Ratio::ZERO, snap.dominant[i]);
        }
        // The lowest label always dominates (no rank offset).
        assert!(snap.dominant.last().unwrap());
    }
}
