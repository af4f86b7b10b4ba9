//! Height-differential movement on recorded heights for the fully
//! asynchronous model.
//!
//! Decisions on an honored edge compare the two heights both endpoints
//! committed the last time the edge was honored, so both sides reach the
//! same verdict from possibly stale data. Ghost slots reserve buffer room
//! for every outstanding offer, which keeps acceptance safe no matter how
//! much the buffer changed while a request sat with the adversary.
//!
//! Two guards keep the buffer honest. An offer is only committed when a
//! slot is free for its reservation (otherwise the node offers nothing that
//! round and recovers as soon as an outstanding request resolves). And the
//! sender-edge insertion test is `recorded height < C - n` on both sides:
//! consecutive sender honorings walk a node's height up until the recorded
//! value stops them, so the cutoff must leave the reservation headroom that
//! the plain capacity test does not.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::NodeId;
use crate::trace::{Action, MsgRec, PacketId};

/// One buffer position: a real packet or a reservation for an outstanding
/// offer to the named neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Packet(PacketId),
    Ghost(NodeId),
}

/// The request a node remembers having submitted toward one neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerEntry {
    pub packet: Option<PacketId>,
    /// Height piggybacked on the request.
    pub height_sent: u64,
    /// Index of the reservation backing `packet`, if any.
    ghost_slot: Option<usize>,
    /// 1-based position `packet` occupied when committed.
    pub commit_pos: Option<u32>,
}

/// What the submit phase handed to the adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Submission {
    pub packet: Option<PacketId>,
    pub height: u64,
}

/// Everything one endpoint did during a round, for trace assembly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeEvents {
    pub actions: Vec<Action>,
    /// Packet accepted into the buffer, with its 1-based landing position.
    pub stored: Option<(PacketId, u32)>,
    /// Packet released to the counterpart, with its recorded commit position.
    pub released: Option<(PacketId, Option<u32>)>,
}

/// Rule constants shared by the sender and the internal nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlusParams {
    pub capacity: u64,
    /// Movement threshold C/n - 2n.
    pub threshold: i64,
    /// Sender-edge insertion cutoff: insert while the recorded height is
    /// strictly below this (C - n).
    pub insert_below: u64,
}

impl PlusParams {
    pub fn new(n: u32, capacity: u64) -> PlusParams {
        let n = n as u64;
        PlusParams {
            capacity,
            threshold: (capacity / n) as i64 - 2 * n as i64,
            insert_below: capacity - n,
        }
    }
}

/// An internal node's slot buffer plus its per-neighbor request ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlusNode {
    slots: Vec<Slot>,
    ledger: BTreeMap<NodeId, LedgerEntry>,
    height: u64,
}

impl PlusNode {
    pub fn new() -> PlusNode {
        PlusNode { slots: Vec::new(), ledger: BTreeMap::new(), height: 0 }
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn ghost_count(&self) -> u32 {
        (self.slots.len() as u64 - self.height) as u32
    }

    pub fn outstanding(&self) -> u32 {
        self.ledger.len() as u32
    }

    pub fn recorded_height_for(&self, peer: NodeId) -> Option<u64> {
        self.ledger.get(&peer).map(|e| e.height_sent)
    }

    pub fn packets(&self) -> impl Iterator<Item = PacketId> + '_ {
        self.slots.iter().filter_map(|s| match s {
            Slot::Packet(p) => Some(*p),
            Slot::Ghost(_) => None,
        })
    }

    pub fn committed_ids(&self) -> BTreeSet<PacketId> {
        self.ledger.values().filter_map(|e| e.packet).collect()
    }

    fn remove_slot(&mut self, idx: usize) {
        self.slots.remove(idx);
        for entry in self.ledger.values_mut() {
            if let Some(g) = entry.ghost_slot {
                debug_assert!(g != idx, "removing a slot another offer still reserves");
                if g > idx {
                    entry.ghost_slot = Some(g - 1);
                }
            }
        }
    }

    fn position_of(&self, packet: PacketId) -> Option<usize> {
        self.slots.iter().position(|s| *s == Slot::Packet(packet))
    }

    /// Removes the committed packet and its reservation after the
    /// counterpart accepted it.
    fn release_committed(&mut self, entry: &LedgerEntry, events: &mut NodeEvents) -> Result<(), String> {
        let Some(q) = entry.packet else { return Ok(()) };
        let pos = self
            .position_of(q)
            .ok_or_else(|| format!("committed packet {q} missing from buffer"))?;
        // Drop the higher index first so the lower one stays valid.
        let ghost = entry.ghost_slot.ok_or_else(|| format!("committed packet {q} has no reservation"))?;
        let (first, second) = if ghost > pos { (ghost, pos) } else { (pos, ghost) };
        self.remove_slot(first);
        self.remove_slot(second);
        self.height -= 1;
        events.released = Some((q, entry.commit_pos));
        events.actions.push(Action::TransferOut);
        events.actions.push(Action::GhostDelete);
        Ok(())
    }

    /// Stores an arriving packet in the reservation made for `entry`, or at
    /// the first unfilled spot when the offer was empty.
    fn store_arrival(
        &mut self,
        entry: &LedgerEntry,
        packet: PacketId,
        capacity: u64,
        events: &mut NodeEvents,
    ) -> Result<(), String> {
        let pos = match entry.ghost_slot {
            Some(g) => {
                self.slots[g] = Slot::Packet(packet);
                events.actions.push(Action::GhostConsume);
                g
            }
            None => {
                if self.slots.len() as u64 >= capacity {
                    return Err(format!("no room to store packet {packet} (capacity {capacity})"));
                }
                self.slots.push(Slot::Packet(packet));
                self.slots.len() - 1
            }
        };
        self.height += 1;
        events.stored = Some((packet, pos as u32 + 1));
        events.actions.push(Action::TransferIn);
        Ok(())
    }

    fn drop_reservation(&mut self, entry: &LedgerEntry, events: &mut NodeEvents) {
        if let Some(g) = entry.ghost_slot {
            debug_assert!(matches!(self.slots[g], Slot::Ghost(_)));
            self.remove_slot(g);
            events.actions.push(Action::GhostDelete);
        }
    }

    /// Full per-round behavior of an internal node on an honored edge.
    ///
    /// `delivered` is what the adversary handed over in the first phase
    /// (`None` on the first honoring of the edge). Returns the node's events
    /// and its fresh submission toward `peer`.
    pub fn on_honored(
        &mut self,
        peer: NodeId,
        peer_kind: PeerKind,
        delivered: Option<MsgRec>,
        params: PlusParams,
    ) -> Result<(NodeEvents, Submission), String> {
        let mut events = NodeEvents::default();
        let recorded = self.ledger.remove(&peer);
        match (recorded, delivered) {
            (None, None) => {} // first honoring: nothing to decide
            (Some(entry), Some(msg)) => {
                self.decide(peer_kind, &entry, msg, params, &mut events)?;
            }
            (Some(_), None) => return Err(format!("recorded request toward {peer} but nothing delivered")),
            (None, Some(_)) => return Err(format!("delivery from {peer} without a recorded request")),
        }
        let submission = self.submit(peer, &mut events, params.capacity);
        if events.stored.is_none() && events.released.is_none() {
            events.actions.insert(0, Action::Hold);
        }
        Ok((events, submission))
    }

    fn decide(
        &mut self,
        peer_kind: PeerKind,
        entry: &LedgerEntry,
        msg: MsgRec,
        params: PlusParams,
        events: &mut NodeEvents,
    ) -> Result<(), String> {
        match peer_kind {
            PeerKind::Sender => {
                // Mirrors the sender's own deletion guard on the same
                // recorded value, so both sides reach the same verdict.
                if entry.height_sent < params.insert_below {
                    let p = msg.packet.ok_or("sender delivered an empty request")?;
                    self.store_arrival(entry, p, params.capacity, events)?;
                } else {
                    self.drop_reservation(entry, events);
                }
            }
            PeerKind::Receiver => {
                // The receiver consumes whatever was committed to it.
                self.release_committed(entry, events)?;
            }
            PeerKind::Internal => {
                let own = entry.height_sent as i64;
                let peer_h = msg.height;
                if own >= peer_h + params.threshold {
                    self.release_committed(entry, events)?;
                } else if own <= peer_h - params.threshold {
                    match msg.packet {
                        Some(p) => self.store_arrival(entry, p, params.capacity, events)?,
                        None => self.drop_reservation(entry, events),
                    }
                } else {
                    self.drop_reservation(entry, events);
                }
            }
        }
        Ok(())
    }

    /// The offer phase: commit the highest uncommitted packet, reserve a
    /// ghost slot for it, and record the request. The offer is empty when
    /// nothing is uncommitted or no slot is free for the reservation.
    fn submit(&mut self, peer: NodeId, events: &mut NodeEvents, capacity: u64) -> Submission {
        let committed = self.committed_ids();
        let pick = self
            .slots
            .iter()
            .enumerate()
            .rev()
            .find_map(|(idx, s)| match s {
                Slot::Packet(p) if !committed.contains(p) => Some((idx, *p)),
                _ => None,
            })
            .filter(|_| (self.slots.len() as u64) < capacity);
        let entry = match pick {
            Some((idx, p)) => {
                self.slots.push(Slot::Ghost(peer));
                events.actions.push(Action::GhostCreate);
                LedgerEntry {
                    packet: Some(p),
                    height_sent: self.height,
                    ghost_slot: Some(self.slots.len() - 1),
                    commit_pos: Some(idx as u32 + 1),
                }
            }
            None => LedgerEntry { packet: None, height_sent: self.height, ghost_slot: None, commit_pos: None },
        };
        let submission = Submission { packet: entry.packet, height: entry.height_sent };
        self.ledger.insert(peer, entry);
        submission
    }
}

impl Default for PlusNode {
    fn default() -> Self {
        PlusNode::new()
    }
}

/// Role of the counterpart on the honored edge, for rule selection only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeerKind {
    Sender,
    Receiver,
    Internal,
}

/// The sender's stream bookkeeping: per-neighbor outstanding offers plus the
/// low ids returned by kept offers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlusSender {
    frontier: PacketId,
    available: BTreeSet<PacketId>,
    committed: BTreeMap<NodeId, PacketId>,
}

impl PlusSender {
    pub fn new() -> PlusSender {
        PlusSender { frontier: 1, available: BTreeSet::new(), committed: BTreeMap::new() }
    }

    pub fn outstanding(&self) -> u32 {
        self.committed.len() as u32
    }

    pub fn committed_to(&self, peer: NodeId) -> Option<PacketId> {
        self.committed.get(&peer).copied()
    }

    /// Processes the delivery and submits the next stream packet. Returns
    /// the inserted packet (if the counterpart stored the previous offer)
    /// and the new offer.
    pub fn on_honored(
        &mut self,
        peer: NodeId,
        delivered: Option<MsgRec>,
        params: PlusParams,
    ) -> Result<(Option<PacketId>, PacketId), String> {
        let mut inserted = None;
        match (self.committed.remove(&peer), delivered) {
            (None, None) => {}
            (Some(prev), Some(msg)) => {
                if msg.height < params.insert_below as i64 {
                    inserted = Some(prev);
                } else {
                    self.available.insert(prev);
                }
            }
            (Some(_), None) => return Err(format!("sender recorded an offer to {peer} but got no delivery")),
            (None, Some(_)) => return Err(format!("delivery to sender from {peer} without a recorded offer")),
        }
        let next = match self.available.pop_first() {
            Some(low) => low,
            None => {
                let id = self.frontier;
                self.frontier += 1;
                id
            }
        };
        self.committed.insert(peer, next);
        Ok((inserted, next))
    }
}

impl Default for PlusSender {
    fn default() -> Self {
        PlusSender::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // n = 4, C = 128: threshold 24, insertion cutoff 124.
    const P: PlusParams = PlusParams { capacity: 128, threshold: 24, insert_below: 124 };

    fn loaded_node(height: u64) -> PlusNode {
        let mut node = PlusNode::new();
        for p in 1..=height {
            node.slots.push(Slot::Packet(p));
        }
        node.height = height;
        node
    }

    /// Commits the top packet toward `peer` as if a previous honoring did it.
    fn commit(node: &mut PlusNode, peer: NodeId) -> Submission {
        let mut ev = NodeEvents::default();
        node.submit(peer, &mut ev, P.capacity)
    }

    #[test]
    fn params_from_config_values() {
        assert_eq!(PlusParams::new(4, 128), P);
    }

    #[test]
    fn large_gap_releases_the_committed_packet() {
        let mut u = loaded_node(60);
        let sub = commit(&mut u, 2);
        assert_eq!(sub, Submission { packet: Some(60), height: 60 });
        // Counterpart reported height 10: 60 >= 10 + 24.
        let msg = MsgRec { packet: Some(900), height: 10 };
        let (ev, _) = u.on_honored(2, PeerKind::Internal, Some(msg), P).unwrap();
        assert_eq!(ev.released, Some((60, Some(60))));
        assert_eq!(u.height(), 59);
    }

    #[test]
    fn deficit_stores_into_the_reservation() {
        let mut u = loaded_node(10);
        let sub = commit(&mut u, 2);
        assert_eq!(sub.height, 10);
        // 10 <= 60 - 24: the arrival lands exactly where the ghost sat.
        let msg = MsgRec { packet: Some(900), height: 60 };
        let (ev, _) = u.on_honored(2, PeerKind::Internal, Some(msg), P).unwrap();
        assert_eq!(ev.stored, Some((900, 11)));
        assert_eq!(u.height(), 11);
        assert_eq!(u.ghost_count(), 1, "submit phase reserved for the new offer");
    }

    #[test]
    fn close_heights_only_drop_the_reservation() {
        let mut u = loaded_node(30);
        commit(&mut u, 2);
        let msg = MsgRec { packet: Some(900), height: 20 };
        let (ev, _) = u.on_honored(2, PeerKind::Internal, Some(msg), P).unwrap();
        assert_eq!(ev.stored, None);
        assert_eq!(ev.released, None);
        assert_eq!(u.height(), 30);
        assert!(ev.actions.contains(&Action::GhostDelete));
    }

    #[test]
    fn first_honoring_only_submits() {
        let mut u = loaded_node(5);
        let (ev, sub) = u.on_honored(2, PeerKind::Internal, None, P).unwrap();
        assert_eq!(ev.stored, None);
        assert_eq!(ev.released, None);
        assert_eq!(sub.packet, Some(5));
        assert_eq!(u.outstanding(), 1);
        assert_eq!(u.ghost_count(), 1);
    }

    #[test]
    fn empty_node_offers_nothing_and_reserves_nothing() {
        let mut u = PlusNode::new();
        let (_, sub) = u.on_honored(2, PeerKind::Internal, None, P).unwrap();
        assert_eq!(sub, Submission { packet: None, height: 0 });
        assert_eq!(u.ghost_count(), 0);
    }

    #[test]
    fn slotless_node_offers_nothing_rather_than_overflowing() {
        // Full buffer: plenty uncommitted, but no room for a reservation.
        let mut u = loaded_node(P.capacity);
        let (_, sub) = u.on_honored(2, PeerKind::Internal, None, P).unwrap();
        assert_eq!(sub, Submission { packet: None, height: P.capacity });
        assert_eq!(u.ghost_count(), 0);
        // One slot of headroom is enough to offer again.
        let mut v = loaded_node(P.capacity - 1);
        let (_, sub) = v.on_honored(2, PeerKind::Internal, None, P).unwrap();
        assert_eq!(sub.packet, Some(P.capacity - 1));
        assert_eq!(v.ghost_count(), 1);
    }

    #[test]
    fn offers_skip_already_committed_packets() {
        let mut u = loaded_node(3);
        let s1 = commit(&mut u, 2);
        let s2 = commit(&mut u, 3);
        assert_eq!(s1.packet, Some(3));
        assert_eq!(s2.packet, Some(2));
        assert_eq!(u.outstanding(), 2);
        assert_eq!(u.ghost_count(), 2);
    }

    #[test]
    fn sender_deletes_only_below_the_cutoff() {
        let mut s = PlusSender::new();
        let (ins, first) = s.on_honored(1, None, P).unwrap();
        assert_eq!((ins, first), (None, 1));
        // Counterpart reported a nearly full buffer: packet 1 is kept and
        // re-offered.
        let (ins, again) = s.on_honored(1, Some(MsgRec { packet: None, height: P.insert_below as i64 }), P).unwrap();
        assert_eq!((ins, again), (None, 1));
        // Now accepted: 1 inserted, next fresh id offered.
        let (ins, next) = s.on_honored(1, Some(MsgRec { packet: None, height: 3 }), P).unwrap();
        assert_eq!((ins, next), (Some(1), 2));
    }

    #[test]
    fn sender_interleaves_neighbors_in_stream_order() {
        let mut s = PlusSender::new();
        let (_, a) = s.on_honored(1, None, P).unwrap();
        let (_, b) = s.on_honored(2, None, P).unwrap();
        assert_eq!((a, b), (1, 2));
        // Neighbor 1 keeps its packet; the id returns to the pool and is
        // re-offered before any fresh id.
        let (ins, again) = s.on_honored(1, Some(MsgRec { packet: None, height: P.insert_below as i64 }), P).unwrap();
        assert_eq!((ins, again), (None, 1));
        assert_eq!(s.outstanding(), 2);
    }
}
