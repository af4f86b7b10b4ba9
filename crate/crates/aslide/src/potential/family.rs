//! Effectual heights, the family partition, and per-node potentials.
//!
//! Internal nodes are labeled by increasing height at the start of a round.
//! A node's effectual height discounts its height by its rank:
//! `max(0, H_i - (i-1)C/n)` under 1-based labels. Families are the greedy
//! prefix partition minimizing each family's average effectual height
//! (largest boundary on ties); the family's cumulative effectual height is
//! then spread over its members, the remainder going to the highest labels.

use crate::config::NodeId;

/// Which height ordering a snapshot was labeled under. The family machinery
/// uses increasing labels; the per-cycle potential uses decreasing ones.
/// The two are never mixed within one analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelOrder {
    Increasing,
    Decreasing,
}

/// A maximal run of adjacent labels whose prefix average is minimal.
/// `lo..=hi` are 1-based label indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Family {
    pub lo: usize,
    pub hi: usize,
    /// Sum of the members' effectual heights.
    pub cumulative: u64,
    /// Average rounded down; every member holds this or one more.
    pub floor_avg: u64,
    /// Members above the floor: the `remainder` highest labels.
    pub remainder: usize,
}

impl Family {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when the 1-based label index sits in the upper (floor + 1) part.
    pub fn in_upper(&self, label: usize) -> bool {
        label > self.hi - self.remainder
    }
}

/// `max(0, H_i - (i-1) * share)` for heights sorted ascending.
pub fn effectual_heights(sorted_heights: &[u64], share: u64) -> Vec<u64> {
    sorted_heights
        .iter()
        .enumerate()
        .map(|(i, &h)| h.saturating_sub(i as u64 * share))
        .collect()
}

/// Greedy prefix partition: each family extends while its average effectual
/// height stays minimal, taking the largest boundary on ties.
pub fn partition_families(eff: &[u64]) -> Vec<Family> {
    let m = eff.len();
    let mut families = Vec::new();
    let mut start = 0usize; // 0-based index of the next family's first member
    while start < m {
        let mut best_end = start;
        let mut best_sum = eff[start];
        let mut sum = eff[start];
        for (end, &e) in eff.iter().enumerate().skip(start + 1) {
            sum += e;
            // avg(start..=end) <= avg(start..=best_end), ties prefer longer
            if sum as u128 * (best_end - start + 1) as u128 <= best_sum as u128 * (end - start + 1) as u128 {
                best_end = end;
                best_sum = sum;
            }
        }
        let len = best_end - start + 1;
        families.push(Family {
            lo: start + 1,
            hi: best_end + 1,
            cumulative: best_sum,
            floor_avg: best_sum / len as u64,
            remainder: (best_sum % len as u64) as usize,
        });
        start = best_end + 1;
    }
    families
}

/// Per-label potentials: the family floor average, plus one for the
/// remainder-absorbing top labels. Indexed 0-based by label - 1.
pub fn node_potentials(families: &[Family]) -> Vec<u64> {
    let m = families.last().map(|f| f.hi).unwrap_or(0);
    let mut phi = vec![0u64; m];
    for fam in families {
        for label in fam.lo..=fam.hi {
            phi[label - 1] = fam.floor_avg + if fam.in_upper(label) { 1 } else { 0 };
        }
    }
    phi
}

/// The full per-round analysis snapshot under increasing labels.
#[derive(Debug, Clone)]
pub struct PotentialSnapshot {
    pub order: LabelOrder,
    /// Node id per 1-based label (index 0 is label 1).
    pub labeling: Vec<NodeId>,
    /// Heights in label order.
    pub heights: Vec<u64>,
    pub effectual: Vec<u64>,
    pub families: Vec<Family>,
    /// Potential per label (0-based).
    pub phi_by_label: Vec<u64>,
    /// Potential per internal node id (index id - 1).
    pub phi_by_node: Vec<u64>,
}

impl PotentialSnapshot {
    /// Builds the snapshot from internal heights indexed by node id - 1.
    /// Ties in the labeling break by node id.
    pub fn compute(internal_heights: &[u64], share: u64) -> PotentialSnapshot {
        let m = internal_heights.len();
        let mut labeling: Vec<NodeId> = (1..=m as u32).collect();
        labeling.sort_by_key(|&id| (internal_heights[id as usize - 1], id));
        let heights: Vec<u64> = labeling.iter().map(|&id| internal_heights[id as usize - 1]).collect();
        let effectual = effectual_heights(&heights, share);
        let families = partition_families(&effectual);
        let phi_by_label = node_potentials(&families);
        let mut phi_by_node = vec![0u64; m];
        for (idx, &id) in labeling.iter().enumerate() {
            phi_by_node[id as usize - 1] = phi_by_label[idx];
        }
        PotentialSnapshot {
            order: LabelOrder::Increasing,
            labeling,
            heights,
            effectual,
            families,
            phi_by_label,
            phi_by_node,
        }
    }

    pub fn phi_of_node(&self, id: NodeId) -> u64 {
        self.phi_by_node[id as usize - 1]
    }

    /// The family containing a 1-based label.
    pub fn family_of_label(&self, label: usize) -> &Family {
        self.families
            .iter()
            .find(|f| f.lo <= label && label <= f.hi)
            .expect("labels are covered")
    }
}

/// Reference partition: enumerate every contiguous partition and pick the
/// lexicographically minimal sequence of (average, then longer-first)
/// blocks. Exponential in the node count; the verification oracle for the
/// greedy construction.
pub fn exhaustive_partition(eff: &[u64]) -> Vec<Family> {
    let m = eff.len();
    assert!(m <= 16, "exhaustive partition oracle limited to 16 nodes");
    if m == 0 {
        return Vec::new();
    }
    let mut best: Option<Vec<Family>> = None;
    // Bit i of mask set = a boundary after position i (0-based).
    for mask in 0..(1u32 << (m - 1)) {
        let mut fams = Vec::new();
        let mut lo = 0usize;
        for i in 0..m {
            let is_end = i == m - 1 || mask & (1 << i) != 0;
            if is_end {
                let sum: u64 = eff[lo..=i].iter().sum();
                let len = i - lo + 1;
                fams.push(Family {
                    lo: lo + 1,
                    hi: i + 1,
                    cumulative: sum,
                    floor_avg: sum / len as u64,
                    remainder: (sum % len as u64) as usize,
                });
                lo = i + 1;
            }
        }
        let better = match &best {
            None => true,
            Some(cur) => lex_less(&fams, cur),
        };
        if better {
            best = Some(fams);
        }
    }
    best.expect("at least one partition")
}

/// Compares block sequences by (average asc, length desc), block by block.
fn lex_less(a: &[Family], b: &[Family]) -> bool {
    for (fa, fb) in a.iter().zip(b.iter()) {
        // avg(fa) ? avg(fb) by cross multiplication
        let left = fa.cumulative as u128 * fb.len() as u128;
        let right = fb.cumulative as u128 * fa.len() as u128;
        if left != right {
            return left < right;
        }
        if fa.len() != fb.len() {
            return fa.len() > fb.len();
        }
    }
    false // identical prefixes and same block count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_heights_form_one_family() {
        let eff = effectual_heights(&[0, 0, 0, 0], 8);
        assert_eq!(eff, vec![0, 0, 0, 0]);
        let fams = partition_families(&eff);
        assert_eq!(fams.len(), 1);
        assert_eq!((fams[0].lo, fams[0].hi), (1, 4));
        assert_eq!(node_potentials(&fams), vec![0, 0, 0, 0]);
    }

    #[test]
    fn staircase_below_share_has_zero_effectual_height() {
        // H_i = (i-1)(share - 1) stays under the rank discount.
        let share = 10u64;
        let heights: Vec<u64> = (0..6).map(|i| i * (share - 1)).collect();
        assert!(effectual_heights(&heights, share).iter().all(|&e| e == 0));
    }

    #[test]
    fn rank_discount_example() {
        // n = 10, C = 100: lowest node 63, the rest full.
        let share = 10;
        let mut heights = vec![100u64; 8];
        heights[0] = 63;
        let eff = effectual_heights(&heights, share);
        assert_eq!(eff[0], 63);
        for (i, &e) in eff.iter().enumerate().skip(1) {
            assert_eq!(e, 100 - 10 * i as u64);
        }
    }

    #[test]
    fn low_prefix_splits_off_the_heavy_tail() {
        let fams = partition_families(&[0, 0, 0, 5]);
        assert_eq!(fams.len(), 2);
        assert_eq!((fams[0].lo, fams[0].hi), (1, 3));
        assert_eq!((fams[1].lo, fams[1].hi), (4, 4));
    }

    #[test]
    fn remainder_goes_to_the_top_labels() {
        // One family of three with cumulative 7: potentials 2, 2, 3.
        let fams = vec![Family { lo: 1, hi: 3, cumulative: 7, floor_avg: 2, remainder: 1 }];
        assert_eq!(node_potentials(&fams), vec![2, 2, 3]);
    }

    #[test]
    fn potentials_sum_to_family_cumulative() {
        let mut rng = crate::rng::Rng::new(4);
        for _ in 0..500 {
            let m = 2 + rng.below(9) as usize;
            let eff: Vec<u64> = (0..m).map(|_| rng.below(60)).collect();
            let fams = partition_families(&eff);
            let phi = node_potentials(&fams);
            for f in &fams {
                let sum: u64 = phi[f.lo - 1..f.hi].iter().sum();
                assert_eq!(sum, f.cumulative);
            }
        }
    }

    #[test]
    fn greedy_matches_exhaustive_partition() {
        let mut rng = crate::rng::Rng::new(11);
        for _ in 0..2000 {
            let m = 1 + rng.below(6) as usize;
            let eff: Vec<u64> = (0..m).map(|_| rng.below(25)).collect();
            assert_eq!(partition_families(&eff), exhaustive_partition(&eff), "eff = {eff:?}");
        }
    }

    #[test]
    fn snapshot_labels_by_height_then_id() {
        let snap = PotentialSnapshot::compute(&[5, 0, 5, 2], 2);
        assert_eq!(snap.labeling, vec![2, 4, 1, 3]);
        assert_eq!(snap.heights, vec![0, 2, 5, 5]);
        assert_eq!(snap.order, LabelOrder::Increasing);
    }
}
