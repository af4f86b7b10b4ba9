//! Height-differential packet movement in the semi-asynchronous model.
//!
//! Awakened endpoints exchange `(packet, height)` messages within the round,
//! then each applies the same three-way comparison: send down a gradient of
//! at least C/n, accept up one, or hold. Internal buffers are strict FILO:
//! arrivals push on top and rule (a) pops the top.

use std::collections::HashSet;

use crate::trace::PacketId;

/// A message submitted by an awakened endpoint: the offered packet (or none)
/// plus the sender's piggybacked height.
pub type Offer = (Option<PacketId>, i64);

/// Outcome of applying the movement rule at one endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// Sender deleted the offered packet from its stream.
    Inserted(PacketId),
    /// Sender kept the offered packet for re-offer.
    Kept,
    /// Internal node's top packet was taken by the counterpart.
    SentTop(PacketId),
    /// Internal node stored the counterpart's packet on top.
    Stored(PacketId),
    /// No movement at this endpoint.
    Held,
    /// Receiver output a packet.
    Got(PacketId),
    /// Receiver saw no packet.
    Nothing,
}

/// The sender's stream cursor: the smallest undeleted packet id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenderNode {
    next_id: PacketId,
}

impl SenderNode {
    pub fn new() -> SenderNode {
        SenderNode { next_id: 1 }
    }

    /// The packet currently offered, always at height C + C/n - 1.
    pub fn offer(&self, sender_height: i64) -> Offer {
        (Some(self.next_id), sender_height)
    }

    pub fn pending(&self) -> PacketId {
        self.next_id
    }

    /// Rule 1: insert iff the counterpart reported height below C.
    pub fn apply(&mut self, received_height: i64, capacity: u64) -> StepOutcome {
        if received_height < capacity as i64 {
            let p = self.next_id;
            self.next_id += 1;
            StepOutcome::Inserted(p)
        } else {
            StepOutcome::Kept
        }
    }
}

impl Default for SenderNode {
    fn default() -> Self {
        SenderNode::new()
    }
}

/// An internal node's FILO buffer.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InternalNode {
    stack: Vec<PacketId>,
}

impl InternalNode {
    pub fn new() -> InternalNode {
        InternalNode { stack: Vec::new() }
    }

    pub fn height(&self) -> u64 {
        self.stack.len() as u64
    }

    pub fn contents(&self) -> &[PacketId] {
        &self.stack
    }

    /// Rule 3 preamble: offer the most recently received packet at the
    /// current height, or (none, 0) when empty.
    pub fn offer(&self) -> Offer {
        (self.stack.last().copied(), self.stack.len() as i64)
    }

    /// Rule 3 body. `threshold` is C/n; `capacity` bounds the push.
    pub fn apply(&mut self, received: Offer, threshold: i64, capacity: u64) -> Result<StepOutcome, String> {
        let own = self.stack.len() as i64;
        let (packet, peer) = received;
        if own >= peer + threshold {
            // (a) the counterpart accepted our top packet
            Ok(match self.stack.pop() {
                Some(p) => StepOutcome::SentTop(p),
                None => StepOutcome::Held,
            })
        } else if own <= peer - threshold {
            // (b) keep ours, store theirs on top
            match packet {
                Some(p) => {
                    if self.stack.len() as u64 >= capacity {
                        return Err(format!("push onto full stack (capacity {capacity})"));
                    }
                    self.stack.push(p);
                    Ok(StepOutcome::Stored(p))
                }
                None => Ok(StepOutcome::Held),
            }
        } else {
            // (c) heights too close, no movement
            Ok(StepOutcome::Held)
        }
    }
}

/// The receiver's output log.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReceiverNode {
    received: Vec<PacketId>,
    seen: HashSet<PacketId>,
}

impl ReceiverNode {
    pub fn new() -> ReceiverNode {
        ReceiverNode::default()
    }

    pub fn offer(&self, receiver_height: i64) -> Offer {
        (None, receiver_height)
    }

    pub fn received(&self) -> &[PacketId] {
        &self.received
    }

    pub fn count(&self) -> u64 {
        self.received.len() as u64
    }

    /// Rule 2: output any non-empty packet; duplicates are a protocol fault.
    pub fn apply(&mut self, received: Offer) -> Result<StepOutcome, String> {
        match received.0 {
            Some(p) => {
                if !self.seen.insert(p) {
                    return Err(format!("duplicate packet {p} delivered to receiver"));
                }
                self.received.push(p);
                Ok(StepOutcome::Got(p))
            }
            None => Ok(StepOutcome::Nothing),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: u64 = 64;
    const SHARE: i64 = 8; // C/n for n = 8

    #[test]
    fn sender_inserts_below_capacity() {
        let mut s = SenderNode::new();
        assert_eq!(s.apply(0, C), StepOutcome::Inserted(1));
        assert_eq!(s.pending(), 2);
        // boundary: h = C - 1 still inserts
        assert_eq!(s.apply(C as i64 - 1, C), StepOutcome::Inserted(2));
        // boundary: h = C re-offers the same packet
        assert_eq!(s.apply(C as i64, C), StepOutcome::Kept);
        assert_eq!(s.pending(), 3);
    }

    #[test]
    fn internal_pops_on_large_gap() {
        let mut u = InternalNode::new();
        for p in 1..=10 {
            u.stack.push(p);
        }
        // own 10 vs peer 1: 10 >= 1 + 8
        let out = u.apply((Some(99), 1), SHARE, C).unwrap();
        assert_eq!(out, StepOutcome::SentTop(10));
        assert_eq!(u.height(), 9);
    }

    #[test]
    fn internal_holds_inside_band() {
        let mut u = InternalNode::new();
        for p in 1..=5 {
            u.stack.push(p);
        }
        let out = u.apply((Some(99), 5), SHARE, C).unwrap();
        assert_eq!(out, StepOutcome::Held);
        assert_eq!(u.height(), 5);
    }

    #[test]
    fn internal_stores_on_deficit() {
        let mut u = InternalNode::new();
        // own 0 vs peer 9: 0 <= 9 - 8
        let out = u.apply((Some(41), 9), SHARE, C).unwrap();
        assert_eq!(out, StepOutcome::Stored(41));
        assert_eq!(u.height(), 1);
        assert_eq!(u.offer(), (Some(41), 1));
    }

    #[test]
    fn receiver_faults_on_duplicate() {
        let mut r = ReceiverNode::new();
        assert_eq!(r.apply((Some(5), 12)).unwrap(), StepOutcome::Got(5));
        assert_eq!(r.apply((None, 3)).unwrap(), StepOutcome::Nothing);
        assert!(r.apply((Some(5), 2)).is_err());
        assert_eq!(r.received(), &[5]);
    }

    #[test]
    fn sender_dominance_over_room() {
        // A node below capacity paired against the sender always accepts.
        for h in 0..C {
            let mut u = InternalNode::new();
            for p in 0..h {
                u.stack.push(p + 1);
            }
            let sender_h = (C + SHARE as u64 - 1) as i64;
            let out = u.apply((Some(777), sender_h), SHARE, C).unwrap();
            assert_eq!(out, StepOutcome::Stored(777), "height {h}");
        }
    }

    #[test]
    fn receiver_dominance_over_backlog() {
        // A node holding anything paired against the receiver always sends.
        for h in 1..=C {
            let mut u = InternalNode::new();
            for p in 0..h {
                u.stack.push(p + 1);
            }
            let out = u.apply((None, -SHARE), SHARE, C).unwrap();
            assert_eq!(out, StepOutcome::SentTop(h));
        }
    }
}
