//! The malicious insider: periodic DTSN increments plus selective DAO
//! dropping. The attacker otherwise runs the honest state machine — it joins,
//! keeps its rank, answers DIS, and forwards data normally.

use serde::Deserialize;

use crate::message::Dao;
use crate::node::{Action, NodeState};
use crate::time::SimTime;
use crate::topology::NodeId;
use crate::trace::DtsnCause;

/// How the attacker node is chosen when not pinned explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackerPlacement {
    /// Root child with the largest sub-DODAG, ties to the lowest id.
    /// Deterministic, and realizes the maximum-impact placement.
    MaxSubtreeRootChild,
    /// Uniformly random among the root's children.
    RandomRootChild,
}

#[derive(Debug, Clone)]
pub struct AttackerConfig {
    /// Explicit attacker node; `None` selects per `placement` once the
    /// DODAG is up.
    pub node: Option<NodeId>,
    pub placement: AttackerPlacement,
    pub increment_period: SimTime,
    pub start_time: SimTime,
    pub drop_descendant_daos: bool,
}

impl Default for AttackerConfig {
    fn default() -> Self {
        AttackerConfig {
            node: None,
            placement: AttackerPlacement::MaxSubtreeRootChild,
            increment_period: SimTime::from_secs(30),
            start_time: SimTime::from_secs(60),
            drop_descendant_daos: true,
        }
    }
}

/// One attack tick: bump the DTSN and advertise it right away. The trickle
/// reset keeps follow-up DIOs coming at the minimum interval.
/// Skipped (returns no actions) while the attacker has not joined yet.
pub fn attack_tick(state: &mut NodeState) -> Vec<Action> {
    if !state.is_joined() {
        return Vec::new();
    }
    let old = state.dtsn;
    state.dtsn = state.dtsn.increment();
    vec![
        Action::DtsnIncrement {
            old,
            new: state.dtsn,
            cause: DtsnCause::Attack,
        },
        Action::SendDioNow,
        Action::TrickleReset,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    Forward,
    Drop,
}

/// Selective forwarding: descendants' DAOs die here so the root never sees
/// the flood; the attacker's own advertisements keep flowing.
pub fn filter_forward(attacker: NodeId, dao: &Dao, drop_descendant_daos: bool) -> Filter {
    if drop_descendant_daos && dao.origin != attacker {
        Filter::Drop
    } else {
        Filter::Forward
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::Dio;
    use crate::node::ProtocolParams;
    use crate::seq::LollipopCounter;
    use crate::trickle::TrickleConfig;

    fn joined_attacker() -> NodeState {
        let mut n = NodeState::new(NodeId(4), TrickleConfig::default());
        n.handle_dio(
            &Dio {
                sender: NodeId(0),
                rank: 256,
                dtsn: LollipopCounter::new(240),
                version: 0,
            },
            &ProtocolParams::default(),
        );
        n
    }

    #[test]
    fn tick_increments_and_advertises() {
        let mut n = joined_attacker();
        let before = n.dtsn;
        let actions = attack_tick(&mut n);
        assert_eq!(n.dtsn, before.increment());
        assert!(actions.contains(&Action::SendDioNow));
        assert!(actions.contains(&Action::TrickleReset));
    }

    #[test]
    fn tick_wraps_past_255_and_continues() {
        let mut n = joined_attacker();
        n.dtsn = LollipopCounter::new(255);
        attack_tick(&mut n);
        assert_eq!(n.dtsn, LollipopCounter::new(0));
        attack_tick(&mut n);
        assert_eq!(n.dtsn, LollipopCounter::new(1));
    }

    #[test]
    fn unjoined_attacker_skips_tick() {
        let mut n = NodeState::new(NodeId(4), TrickleConfig::default());
        assert!(attack_tick(&mut n).is_empty());
        assert_eq!(n.dtsn, crate::seq::DTSN_INITIAL);
    }

    #[test]
    fn drops_descendant_daos_only() {
        let attacker = NodeId(4);
        let descendant_dao = Dao {
            origin: NodeId(9),
            forwarder: NodeId(9),
            parent_of_origin: NodeId(4),
            dtsn_trigger_bit: true,
            hop_trail: vec![NodeId(9)],
        };
        let own_dao = Dao {
            origin: NodeId(4),
            forwarder: NodeId(4),
            parent_of_origin: NodeId(0),
            dtsn_trigger_bit: false,
            hop_trail: vec![NodeId(4)],
        };
        assert_eq!(filter_forward(attacker, &descendant_dao, true), Filter::Drop);
        assert_eq!(filter_forward(attacker, &own_dao, true), Filter::Forward);
        assert_eq!(filter_forward(attacker, &descendant_dao, false), Filter::Forward);
    }
}
