//! DODAG snapshot: per-node rank, preferred parent, and DAO parent sets.
//!
//! Built either analytically from a topology (hop-count ranks via BFS, the
//! same parent selection rules the per-node state machine applies) or as a
//! snapshot of a live simulation. The analytic form is what the detection
//! rate analysis runs on; tests assert the two agree once a run converges.

use std::collections::VecDeque;

use crate::topology::{NodeId, Topology, ROOT};

pub const DEFAULT_RANK_STEP: u32 = 256;
pub const DEFAULT_ROOT_RANK: u32 = 256;

#[derive(Debug, Clone)]
pub struct Dodag {
    rank: Vec<Option<u32>>,
    preferred: Vec<Option<NodeId>>,
    /// Preferred parent first, then up to k non-preferred parents.
    dao_parents: Vec<Vec<NodeId>>,
}

impl Dodag {
    pub fn new(
        rank: Vec<Option<u32>>,
        preferred: Vec<Option<NodeId>>,
        dao_parents: Vec<Vec<NodeId>>,
    ) -> Dodag {
        Dodag {
            rank,
            preferred,
            dao_parents,
        }
    }

    /// Converged DODAG the protocol reaches on `topology` with hop-count
    /// ranks: every node's rank is `root_rank + step * hops`, the preferred
    /// parent is the lowest-id minimum-rank neighbor, and the DAO parent set
    /// adds the `k` next candidates with rank strictly below the node's own.
    pub fn from_topology(topology: &Topology, k: u32) -> Dodag {
        let n = topology.len();
        let mut hops: Vec<Option<u32>> = vec![None; n];
        hops[ROOT.index()] = Some(0);
        let mut queue = VecDeque::from([ROOT]);
        while let Some(v) = queue.pop_front() {
            for w in topology.neighbors(v) {
                if hops[w.index()].is_none() {
                    hops[w.index()] = Some(hops[v.index()].unwrap() + 1);
                    queue.push_back(w);
                }
            }
        }

        let rank: Vec<Option<u32>> = hops
            .iter()
            .map(|h| h.map(|h| DEFAULT_ROOT_RANK + DEFAULT_RANK_STEP * h))
            .collect();

        let mut preferred: Vec<Option<NodeId>> = vec![None; n];
        let mut dao_parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for v in topology.node_ids() {
            if v == ROOT {
                continue;
            }
            let own = match rank[v.index()] {
                Some(r) => r,
                None => continue, // unreachable node (cannot happen on connected layouts)
            };
            // eligible parents: strictly lower rank, ordered by (rank, id)
            let mut eligible: Vec<(u32, NodeId)> = topology
                .neighbors(v)
                .into_iter()
                .filter_map(|w| rank[w.index()].map(|r| (r, w)))
                .filter(|&(r, _)| r < own)
                .collect();
            eligible.sort();
            if let Some(&(_, best)) = eligible.first() {
                preferred[v.index()] = Some(best);
                let set: Vec<NodeId> = eligible
                    .iter()
                    .take(1 + k as usize)
                    .map(|&(_, w)| w)
                    .collect();
                dao_parents[v.index()] = set;
            }
        }

        Dodag {
            rank,
            preferred,
            dao_parents,
        }
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    pub fn rank(&self, v: NodeId) -> Option<u32> {
        self.rank[v.index()]
    }

    pub fn preferred_parent(&self, v: NodeId) -> Option<NodeId> {
        self.preferred[v.index()]
    }

    pub fn dao_parents(&self, v: NodeId) -> &[NodeId] {
        &self.dao_parents[v.index()]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.rank.len() as u16).map(NodeId)
    }

    /// Direct children of `v` in the preferred-parent tree, ascending by id.
    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&w| self.preferred[w.index()] == Some(v))
            .collect()
    }

    /// Hops from the root along the preferred-parent chain.
    pub fn depth(&self, v: NodeId) -> Option<u32> {
        if v == ROOT {
            return Some(0);
        }
        let mut depth = 0;
        let mut cur = v;
        while let Some(p) = self.preferred[cur.index()] {
            depth += 1;
            if p == ROOT {
                return Some(depth);
            }
            cur = p;
            if depth as usize > self.rank.len() {
                return None; // cycle guard
            }
        }
        None
    }

    /// True iff `v` lies in the sub-DODAG of `a` (strict descendant in the
    /// preferred-parent tree).
    pub fn in_sub_dodag(&self, v: NodeId, a: NodeId) -> bool {
        if v == a || v == ROOT {
            return false;
        }
        let mut cur = v;
        let mut steps = 0;
        while let Some(p) = self.preferred[cur.index()] {
            if p == a {
                return true;
            }
            if p == ROOT {
                return false;
            }
            cur = p;
            steps += 1;
            if steps > self.rank.len() {
                return false;
            }
        }
        false
    }

    /// Number of strict descendants of `v` in the preferred-parent tree.
    pub fn descendant_count(&self, v: NodeId) -> usize {
        self.node_ids().filter(|&w| self.in_sub_dodag(w, v)).count()
    }

    /// Every joined node's preferred-parent chain must reach the root without
    /// revisiting a node.
    pub fn is_acyclic(&self) -> bool {
        for v in self.node_ids() {
            if v == ROOT || self.preferred[v.index()].is_none() {
                continue;
            }
            let mut cur = v;
            let mut steps = 0usize;
            loop {
                match self.preferred[cur.index()] {
                    Some(p) if p == ROOT => break,
                    Some(p) => {
                        cur = p;
                        steps += 1;
                        if steps > self.rank.len() {
                            return false;
                        }
                    }
                    None => return false, // joined node hanging off an unjoined one
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TopologyParams;

    fn chain(n: usize) -> Topology {
        // nodes 35m apart in a line; only consecutive nodes are linked
        let positions = (0..n).map(|i| (35.0 * i as f64, 0.0)).collect();
        Topology::from_positions(
            positions,
            TopologyParams {
                area_side_m: 35.0 * n as f64,
                ..TopologyParams::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn chain_ranks_follow_hop_count() {
        let t = chain(4);
        let d = Dodag::from_topology(&t, 0);
        assert_eq!(d.rank(NodeId(0)), Some(256));
        assert_eq!(d.rank(NodeId(1)), Some(512));
        assert_eq!(d.rank(NodeId(2)), Some(768));
        assert_eq!(d.rank(NodeId(3)), Some(1024));
        assert_eq!(d.preferred_parent(NodeId(3)), Some(NodeId(2)));
        assert_eq!(d.depth(NodeId(3)), Some(3));
    }

    #[test]
    fn dao_parents_capped_by_k_and_availability() {
        // star: root in the middle, 4 leaves; then one outer node linked to
        // two of the leaves
        let t = Topology::from_positions(
            vec![
                (50.0, 50.0), // 0 root
                (50.0, 15.0), // 1
                (50.0, 85.0), // 2
                (15.0, 50.0), // 3
                (85.0, 50.0), // 4
                (28.0, 80.0), // 5: linked to 2 and 3 only
            ],
            TopologyParams {
                area_side_m: 100.0,
                tx_range_m: 36.0,
                interference_range_m: 80.0,
                ..TopologyParams::default()
            },
        )
        .unwrap();
        assert!(!t.linked(NodeId(5), NodeId(0)));
        assert!(t.linked(NodeId(5), NodeId(2)));
        assert!(t.linked(NodeId(5), NodeId(3)));

        let d0 = Dodag::from_topology(&t, 0);
        assert_eq!(d0.dao_parents(NodeId(5)), &[NodeId(2)]);

        let d2 = Dodag::from_topology(&t, 2);
        assert_eq!(d2.dao_parents(NodeId(5)), &[NodeId(2), NodeId(3)]);
        // leaves have only the root below them
        assert_eq!(d2.dao_parents(NodeId(1)), &[NodeId(0)]);
    }

    #[test]
    fn sub_dodag_membership_and_counts() {
        let t = chain(5);
        let d = Dodag::from_topology(&t, 0);
        assert!(d.in_sub_dodag(NodeId(4), NodeId(1)));
        assert!(d.in_sub_dodag(NodeId(2), NodeId(1)));
        assert!(!d.in_sub_dodag(NodeId(1), NodeId(1)));
        assert!(!d.in_sub_dodag(NodeId(1), NodeId(2)));
        assert_eq!(d.descendant_count(NodeId(1)), 3);
        assert_eq!(d.descendant_count(NodeId(4)), 0);
        assert!(d.is_acyclic());
    }

    #[test]
    fn generated_dodags_are_trees() {
        for seed in 0..5 {
            let t = Topology::generate(30, seed, TopologyParams::default()).unwrap();
            let d = Dodag::from_topology(&t, 2);
            assert!(d.is_acyclic());
            for v in d.node_ids() {
                if v == ROOT {
                    continue;
                }
                let own = d.rank(v).unwrap();
                for &p in d.dao_parents(v) {
                    assert!(d.rank(p).unwrap() < own, "parent rank not below own");
                }
                assert_eq!(d.dao_parents(v).first(), Some(&d.preferred_parent(v).unwrap()));
            }
        }
    }
}
