//! Random node placement and unit-disk link/interference derivation.
//!
//! Nodes live on a square area; two nodes share a link exactly when their
//! Euclidean distance is within the transmission range, and interfere within
//! the (larger) interference range. Generated layouts are resampled until the
//! link graph is connected.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dodag::Dodag;

/// Identifier of a node; 0 is reserved for the DODAG root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u16);

pub const ROOT: NodeId = NodeId(0);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_root(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Geometry parameters for placement and radio ranges (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyParams {
    pub area_side_m: f64,
    pub tx_range_m: f64,
    pub interference_range_m: f64,
    /// How many whole layouts to sample before giving up on connectivity.
    pub connect_retries: u32,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            area_side_m: 150.0,
            tx_range_m: 40.0,
            interference_range_m: 80.0,
            connect_retries: 1000,
        }
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("tx range {tx}m exceeds interference range {interference}m")]
    RangeOrder { tx: f64, interference: f64 },
    #[error("no connected layout for {nodes} nodes after {attempts} attempts; parameters too sparse")]
    Disconnected { nodes: usize, attempts: u32 },
    #[error("topology table parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Static node layout with unit-disk connectivity.
#[derive(Debug, Clone)]
pub struct Topology {
    positions: Vec<(f64, f64)>,
    params: TopologyParams,
    seed: u64,
}

impl Topology {
    /// Places `n` nodes uniformly at random, resampling whole layouts until
    /// the tx-range graph is connected. Node 0 is the root.
    pub fn generate(n: usize, seed: u64, params: TopologyParams) -> Result<Topology, TopologyError> {
        if n < 2 {
            return Err(TopologyError::TooFewNodes(n));
        }
        if params.tx_range_m > params.interference_range_m {
            return Err(TopologyError::RangeOrder {
                tx: params.tx_range_m,
                interference: params.interference_range_m,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..params.connect_retries.max(1) {
            let positions: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    (
                        rng.gen_range(0.0..params.area_side_m),
                        rng.gen_range(0.0..params.area_side_m),
                    )
                })
                .collect();
            let t = Topology {
                positions,
                params: params.clone(),
                seed,
            };
            if t.is_connected() {
                return Ok(t);
            }
        }
        Err(TopologyError::Disconnected {
            nodes: n,
            attempts: params.connect_retries.max(1),
        })
    }

    /// Builds a topology from explicit coordinates (hand-crafted layouts).
    pub fn from_positions(
        positions: Vec<(f64, f64)>,
        params: TopologyParams,
    ) -> Result<Topology, TopologyError> {
        if positions.len() < 2 {
            return Err(TopologyError::TooFewNodes(positions.len()));
        }
        if params.tx_range_m > params.interference_range_m {
            return Err(TopologyError::RangeOrder {
                tx: params.tx_range_m,
                interference: params.interference_range_m,
            });
        }
        Ok(Topology {
            positions,
            params,
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &TopologyParams {
        &self.params
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.positions.len() as u16).map(NodeId)
    }

    pub fn position(&self, a: NodeId) -> (f64, f64) {
        self.check(a);
        self.positions[a.index()]
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        let (ax, ay) = self.position(a);
        let (bx, by) = self.position(b);
        ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
    }

    /// Unit-disk link test: symmetric, irreflexive.
    pub fn linked(&self, a: NodeId, b: NodeId) -> bool {
        self.check(a);
        self.check(b);
        a != b && self.distance(a, b) <= self.params.tx_range_m
    }

    /// Link neighbors of `a`, ascending by id.
    pub fn neighbors(&self, a: NodeId) -> Vec<NodeId> {
        self.node_ids().filter(|&b| b != a && self.linked(a, b)).collect()
    }

    /// All nodes within interference range of `a`, excluding `a`.
    pub fn interferers(&self, a: NodeId) -> Vec<NodeId> {
        self.check(a);
        self.node_ids()
            .filter(|&b| b != a && self.distance(a, b) <= self.params.interference_range_m)
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.positions.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([ROOT]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    /// Plain-text table export: one `id x y` line per node, plus a comment
    /// header. Intended for replayable runs and hand-crafted test layouts.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str("# topology table: id x_m y_m\n");
        for id in self.node_ids() {
            let (x, y) = self.position(id);
            out.push_str(&format!("{id}\t{x:.6}\t{y:.6}\n"));
        }
        out
    }

    /// Parses the table format written by [`Topology::to_table`]. Lines are
    /// `id x y`; `#` comments and blank lines are ignored. Ids must be dense
    /// starting at 0 but may appear in any order.
    pub fn from_table(text: &str, params: TopologyParams) -> Result<Topology, TopologyError> {
        let mut rows: Vec<(usize, f64, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let parse = |field: Option<&str>, what: &str| {
                field.ok_or_else(|| TopologyError::Parse {
                    line: lineno + 1,
                    reason: format!("missing {what}"),
                })
            };
            let id: usize = parse(fields.next(), "id")?
                .parse()
                .map_err(|e| TopologyError::Parse {
                    line: lineno + 1,
                    reason: format!("bad id: {e}"),
                })?;
            let x: f64 = parse(fields.next(), "x")?
                .parse()
                .map_err(|e| TopologyError::Parse {
                    line: lineno + 1,
                    reason: format!("bad x: {e}"),
                })?;
            let y: f64 = parse(fields.next(), "y")?
                .parse()
                .map_err(|e| TopologyError::Parse {
                    line: lineno + 1,
                    reason: format!("bad y: {e}"),
                })?;
            rows.push((id, x, y));
        }
        rows.sort_by_key(|r| r.0);
        for (i, row) in rows.iter().enumerate() {
            if row.0 != i {
                return Err(TopologyError::Parse {
                    line: 0,
                    reason: format!("node ids not dense: expected {i}, found {}", row.0),
                });
            }
        }
        Topology::from_positions(rows.into_iter().map(|(_, x, y)| (x, y)).collect(), params)
    }

    fn check(&self, a: NodeId) {
        assert!(
            a.index() < self.positions.len(),
            "unknown NodeId {a} in topology of {} nodes",
            self.positions.len()
        );
    }
}

/// Picks the attacker uniformly at random among the root's DODAG children.
///
/// Every link neighbor of the root joins at the minimum non-root rank, so the
/// candidate set is exactly the root's direct children in the built DODAG.
pub fn pick_attacker(dodag: &Dodag, seed: u64) -> NodeId {
    let candidates = dodag.children(ROOT);
    assert!(!candidates.is_empty(), "root has no children in the DODAG");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates[rng.gen_range(0..candidates.len())]
}

/// Deterministic maximum-impact placement: the root child with the largest
/// sub-DODAG, ties broken by lowest id.
pub fn pick_attacker_max_subtree(dodag: &Dodag) -> NodeId {
    let candidates = dodag.children(ROOT);
    assert!(!candidates.is_empty(), "root has no children in the DODAG");
    candidates
        .iter()
        .copied()
        .max_by_key(|&c| (dodag.descendant_count(c), std::cmp::Reverse(c)))
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_params() -> TopologyParams {
        TopologyParams::default()
    }

    #[test]
    fn generate_is_deterministic() {
        let a = Topology::generate(20, 7, default_params()).unwrap();
        let b = Topology::generate(20, 7, default_params()).unwrap();
        for id in a.node_ids() {
            assert_eq!(a.position(id), b.position(id));
        }
    }

    #[test]
    fn generated_topologies_are_connected() {
        for seed in 0..10 {
            for n in [20usize, 30, 40, 50] {
                let t = Topology::generate(n, seed, default_params()).unwrap();
                assert_eq!(t.len(), n);
                assert!(t.is_connected());
            }
        }
    }

    #[test]
    fn two_node_layout_links_the_pair() {
        let t = Topology::generate(2, 3, default_params()).unwrap();
        assert!(t.linked(NodeId(0), NodeId(1)));
    }

    #[test]
    fn sparse_parameters_fail_after_retry_budget() {
        let params = TopologyParams {
            area_side_m: 10_000.0,
            tx_range_m: 1.0,
            interference_range_m: 2.0,
            connect_retries: 5,
        };
        let err = Topology::generate(5, 1, params).unwrap_err();
        assert!(matches!(err, TopologyError::Disconnected { .. }));
    }

    #[test]
    fn link_relation_symmetric_irreflexive() {
        let t = Topology::generate(30, 11, default_params()).unwrap();
        for a in t.node_ids() {
            for b in t.node_ids() {
                if a == b {
                    continue;
                }
                assert_eq!(t.linked(a, b), t.linked(b, a));
            }
        }
    }

    #[test]
    fn linked_respects_disk_boundary() {
        let params = default_params();
        let t = Topology::from_positions(vec![(0.0, 0.0), (39.9, 0.0), (40.1, 40.0)], params)
            .unwrap();
        assert!(t.linked(NodeId(0), NodeId(1)));
        assert!(!t.linked(NodeId(0), NodeId(2)));
    }

    #[test]
    fn interferers_cover_linked_neighbors() {
        for seed in [2u64, 5, 9] {
            let t = Topology::generate(40, seed, default_params()).unwrap();
            for a in t.node_ids() {
                let interferers = t.interferers(a);
                for b in t.neighbors(a) {
                    assert!(interferers.contains(&b), "node {a}: neighbor {b} not interfering");
                }
            }
        }
    }

    #[test]
    fn interference_distances() {
        let t = Topology::from_positions(
            vec![(0.0, 0.0), (60.0, 0.0), (90.0, 0.0)],
            default_params(),
        )
        .unwrap();
        let inter = t.interferers(NodeId(0));
        assert!(inter.contains(&NodeId(1))); // 60 < 80
        assert!(!inter.contains(&NodeId(2))); // 90 > 80
    }

    #[test]
    #[should_panic(expected = "unknown NodeId")]
    fn unknown_node_panics() {
        let t = Topology::generate(5, 1, default_params()).unwrap();
        t.linked(NodeId(0), NodeId(99));
    }

    #[test]
    fn table_round_trip() {
        let t = Topology::generate(15, 4, default_params()).unwrap();
        let text = t.to_table();
        let back = Topology::from_table(&text, default_params()).unwrap();
        for id in t.node_ids() {
            let (ax, ay) = t.position(id);
            let (bx, by) = back.position(id);
            assert!((ax - bx).abs() < 1e-5 && (ay - by).abs() < 1e-5);
        }
    }

    #[test]
    fn table_rejects_sparse_ids() {
        let text = "0 1.0 1.0\n2 5.0 5.0\n";
        assert!(Topology::from_table(text, default_params()).is_err());
    }
}
