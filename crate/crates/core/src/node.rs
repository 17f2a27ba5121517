//! Per-node RPL state machine: joining, rank and parent management, DTSN
//! reaction, DAO origination and forwarding in both modes of operation.
//!
//! Handlers mutate the node and return [`Action`]s for the event loop to
//! interpret (transmissions to schedule, timers to reset, trace entries to
//! emit). Nothing in here touches the clock or the RNG, which keeps the
//! protocol rules directly unit-testable.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::message::{Dao, Dio};
use crate::seq::{LollipopCounter, DTSN_INITIAL};
use crate::topology::NodeId;
use crate::trace::DtsnCause;
use crate::trickle::{TrickleConfig, TrickleTimer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Storing,
    NonStoring,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Storing => "storing",
            Mode::NonStoring => "non-storing",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "storing" => Some(Mode::Storing),
            "non-storing" | "nonstoring" | "non_storing" => Some(Mode::NonStoring),
            _ => None,
        }
    }
}

/// Protocol constants shared by every node in a run.
#[derive(Debug, Clone, Copy)]
pub struct ProtocolParams {
    pub mode: Mode,
    pub rank_step: u32,
    pub root_rank: u32,
    /// Extra non-preferred DAO parents each node may keep (0 = plain RPL).
    pub dao_parent_k: u32,
    /// Enables the node-side detection rule: answer a non-preferred DAO
    /// parent's DTSN increment with a trigger-bit DAO via the preferred one.
    pub detection_enabled: bool,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            mode: Mode::NonStoring,
            rank_step: 256,
            root_rank: 256,
            dao_parent_k: 0,
            detection_enabled: false,
        }
    }
}

/// Hop-count objective: a candidate offering rank `parent_rank` yields this
/// rank, strictly greater than the parent's.
pub fn compute_rank(parent_rank: u32, rank_step: u32) -> u32 {
    parent_rank + rank_step
}

/// A heard neighbor: last advertised rank and DTSN.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub id: NodeId,
    pub rank: u32,
    pub dtsn: LollipopCounter,
}

/// Lowest resulting rank wins, ties to the lowest id.
pub fn select_preferred_parent(candidates: &[Candidate]) -> Option<NodeId> {
    candidates.iter().map(|c| (c.rank, c.id)).min().map(|(_, id)| id)
}

/// Preferred parent first, then up to `k` lowest-rank non-preferred
/// candidates (ties by lowest id). `candidates` must already be the eligible
/// parent set (every rank strictly below the node's own).
pub fn select_dao_parents(candidates: &[Candidate], preferred: NodeId, k: u32) -> Vec<NodeId> {
    let mut rest: Vec<(u32, NodeId)> = candidates
        .iter()
        .filter(|c| c.id != preferred)
        .map(|c| (c.rank, c.id))
        .collect();
    rest.sort();
    let mut set = Vec::with_capacity(1 + k as usize);
    set.push(preferred);
    set.extend(rest.into_iter().take(k as usize).map(|(_, id)| id));
    set
}

/// Side effects for the event loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// Broadcast a DIO immediately (DIS answer, attack tick).
    SendDioNow,
    /// Queue a DAO after the configured random delay.
    ScheduleDao { trigger: bool },
    /// Inconsistency: restart the trickle timer at its minimum interval.
    TrickleReset,
    /// Preferred parent adopted or changed (`old` = None on first join).
    ParentUpdate {
        old: Option<NodeId>,
        new: NodeId,
        rank: u32,
    },
    /// Own DTSN moved forward.
    DtsnIncrement {
        old: LollipopCounter,
        new: LollipopCounter,
        cause: DtsnCause,
    },
}

/// What to do with a DAO that arrived at this node.
#[derive(Debug, Clone, PartialEq)]
pub enum DaoDisposition {
    /// Forward the (rewritten) DAO to the next hop.
    Forward { next: NodeId, dao: Dao },
    /// Root reached; route state recorded.
    RootStored,
    /// Receiver has no parent; the DAO dies here.
    DropUnjoined,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("no route to node {0}")]
    NoRoute(NodeId),
    #[error("route lookup is a root-only operation")]
    NotRoot,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    is_root: bool,
    rank: Option<u32>,
    candidates: Vec<Candidate>,
    preferred: Option<NodeId>,
    dao_parents: Vec<NodeId>,
    pub dtsn: LollipopCounter,
    /// Storing mode: destination -> next hop. Kept by every non-leaf node
    /// and by the root.
    routing_table: BTreeMap<NodeId, NodeId>,
    /// Non-storing mode, root only: origin -> origin's preferred parent.
    sr_parent: BTreeMap<NodeId, NodeId>,
    dao_pending: bool,
    pending_trigger: bool,
    pub trickle: TrickleTimer,
}

impl NodeState {
    pub fn new(id: NodeId, trickle: TrickleConfig) -> NodeState {
        NodeState {
            id,
            is_root: false,
            rank: None,
            candidates: Vec::new(),
            preferred: None,
            dao_parents: Vec::new(),
            dtsn: DTSN_INITIAL,
            routing_table: BTreeMap::new(),
            sr_parent: BTreeMap::new(),
            dao_pending: false,
            pending_trigger: false,
            trickle: TrickleTimer::new(trickle),
        }
    }

    pub fn new_root(id: NodeId, root_rank: u32, trickle: TrickleConfig) -> NodeState {
        let mut n = NodeState::new(id, trickle);
        n.is_root = true;
        n.rank = Some(root_rank);
        n
    }

    pub fn is_root(&self) -> bool {
        self.is_root
    }

    pub fn is_joined(&self) -> bool {
        self.rank.is_some()
    }

    pub fn rank(&self) -> Option<u32> {
        self.rank
    }

    pub fn preferred_parent(&self) -> Option<NodeId> {
        self.preferred
    }

    pub fn dao_parents(&self) -> &[NodeId] {
        &self.dao_parents
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn routing_table(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.routing_table
    }

    pub fn source_route_parents(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.sr_parent
    }

    /// Current DIO advertisement, if joined.
    pub fn make_dio(&self) -> Option<Dio> {
        self.rank.map(|rank| Dio {
            sender: self.id,
            rank,
            dtsn: self.dtsn,
            version: 0,
        })
    }

    fn candidate(&self, id: NodeId) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.id == id)
    }

    fn upsert_candidate(&mut self, id: NodeId, rank: u32, dtsn: LollipopCounter) {
        match self.candidates.iter_mut().find(|c| c.id == id) {
            Some(c) => {
                c.rank = rank;
                c.dtsn = dtsn;
            }
            None => {
                self.candidates.push(Candidate { id, rank, dtsn });
                self.candidates.sort_by_key(|c| c.id);
            }
        }
    }

    /// Re-derives rank, preferred parent, and the DAO parent set from the
    /// recorded candidates. Candidates at or above the node's own rank are
    /// kept on record but never selected as parents.
    fn recompute_parents(&mut self, p: &ProtocolParams) {
        let best = match self.candidates.iter().map(|c| (c.rank, c.id)).min() {
            Some(b) => b,
            None => return,
        };
        let own = compute_rank(best.0, p.rank_step);
        let eligible: Vec<Candidate> = self
            .candidates
            .iter()
            .copied()
            .filter(|c| c.rank < own)
            .collect();
        let preferred = select_preferred_parent(&eligible).expect("best candidate is eligible");
        self.rank = Some(own);
        self.preferred = Some(preferred);
        self.dao_parents = select_dao_parents(&eligible, preferred, p.dao_parent_k);
    }

    /// Processes a received DIO.
    pub fn handle_dio(&mut self, dio: &Dio, p: &ProtocolParams) -> Vec<Action> {
        let mut actions = Vec::new();
        if dio.sender == self.id {
            return actions;
        }
        let prev_dtsn = self.candidate(dio.sender).map(|c| c.dtsn);
        self.upsert_candidate(dio.sender, dio.rank, dio.dtsn);
        if self.is_root {
            return actions;
        }

        let old_pref = self.preferred;
        let old_rank = self.rank;
        self.recompute_parents(p);
        if self.preferred != old_pref || self.rank != old_rank {
            let new = self.preferred.expect("recompute set a parent");
            actions.push(Action::ParentUpdate {
                old: old_pref,
                new,
                rank: self.rank.expect("recompute set a rank"),
            });
            actions.push(Action::TrickleReset);
            // advertise reachability along the new upward path
            actions.push(Action::ScheduleDao { trigger: false });
        }

        // DTSN reaction: only DAO parents with a recorded baseline count.
        // DIOs carrying an older DTSN than stored are ignored here.
        if let Some(prev) = prev_dtsn {
            if self.dao_parents.contains(&dio.sender) && dio.dtsn.is_newer_than(prev) {
                if self.preferred == Some(dio.sender) {
                    actions.push(Action::ScheduleDao { trigger: true });
                    if p.mode == Mode::NonStoring {
                        // the increment must propagate through the sub-DODAG
                        let old = self.dtsn;
                        self.dtsn = self.dtsn.increment();
                        actions.push(Action::DtsnIncrement {
                            old,
                            new: self.dtsn,
                            cause: DtsnCause::Cascade,
                        });
                        actions.push(Action::TrickleReset);
                    }
                } else if p.detection_enabled {
                    // detection rule: report via the preferred parent, which
                    // cannot be on the incrementing parent's path; own DTSN
                    // stays put
                    actions.push(Action::ScheduleDao { trigger: true });
                }
            }
        }
        actions
    }

    /// A DIS asks for an immediate DIO, bypassing trickle suppression.
    /// Unjoined nodes have nothing to advertise.
    pub fn handle_dis(&mut self) -> Vec<Action> {
        if self.is_joined() {
            vec![Action::SendDioNow]
        } else {
            Vec::new()
        }
    }

    /// Requests a DAO transmission. Returns true when the event loop should
    /// schedule a new due time (none was pending); a pending DAO absorbs the
    /// trigger bit instead.
    pub fn schedule_dao(&mut self, trigger: bool) -> bool {
        self.pending_trigger |= trigger;
        if self.dao_pending {
            false
        } else {
            self.dao_pending = true;
            true
        }
    }

    pub fn dao_pending(&self) -> bool {
        self.dao_pending
    }

    /// The scheduled DAO came due: build it, addressed via the current
    /// preferred parent. Returns None if the node lost its parent meanwhile.
    pub fn take_due_dao(&mut self) -> Option<(NodeId, Dao)> {
        let trigger = self.pending_trigger;
        self.dao_pending = false;
        self.pending_trigger = false;
        let via = self.preferred?;
        Some((via, self.emit_dao(via, trigger)))
    }

    /// Builds a DAO originated here. `via` must be one of the DAO parents.
    pub fn emit_dao(&mut self, via: NodeId, trigger: bool) -> Dao {
        debug_assert!(
            self.dao_parents.contains(&via),
            "emit_dao via {via} not in DAO parent set"
        );
        self.dao_pending = false;
        self.pending_trigger = false;
        Dao {
            origin: self.id,
            forwarder: self.id,
            parent_of_origin: self.preferred.expect("joined node has a parent"),
            dtsn_trigger_bit: trigger,
            hop_trail: vec![self.id],
        }
    }

    /// Processes a DAO received as the unicast next hop on its way up.
    pub fn handle_dao(&mut self, dao: &Dao, from: NodeId, p: &ProtocolParams) -> DaoDisposition {
        if self.is_root {
            match p.mode {
                Mode::Storing => {
                    self.routing_table.insert(dao.origin, from);
                }
                Mode::NonStoring => {
                    self.sr_parent.insert(dao.origin, dao.parent_of_origin);
                }
            }
            return DaoDisposition::RootStored;
        }
        if !self.is_joined() {
            return DaoDisposition::DropUnjoined;
        }
        if p.mode == Mode::Storing {
            // downward entry learned before forwarding
            self.routing_table.insert(dao.origin, from);
        }
        let mut fwd = dao.clone();
        fwd.forwarder = self.id;
        fwd.hop_trail.push(self.id);
        DaoDisposition::Forward {
            next: self.preferred.expect("joined node has a parent"),
            dao: fwd,
        }
    }

    /// Root-side downward route lookup.
    pub fn route_downward(&self, dest: NodeId, mode: Mode) -> Result<Vec<NodeId>, RouteError> {
        if !self.is_root {
            return Err(RouteError::NotRoot);
        }
        match mode {
            Mode::Storing => self
                .routing_table
                .get(&dest)
                .map(|&hop| vec![self.id, hop])
                .ok_or(RouteError::NoRoute(dest)),
            Mode::NonStoring => {
                // follow recorded parents upward from the destination
                let mut path = vec![dest];
                let mut cur = dest;
                while cur != self.id {
                    match self.sr_parent.get(&cur) {
                        Some(&p) => {
                            if path.contains(&p) {
                                return Err(RouteError::NoRoute(dest)); // stale loop
                            }
                            path.push(p);
                            cur = p;
                        }
                        None if cur == dest => return Err(RouteError::NoRoute(dest)),
                        None => {
                            // partial route: some ancestor never announced
                            return Err(RouteError::NoRoute(dest));
                        }
                    }
                    if path.len() > self.sr_parent.len() + 2 {
                        return Err(RouteError::NoRoute(dest));
                    }
                }
                path.reverse();
                Ok(path)
            }
        }
    }
}
