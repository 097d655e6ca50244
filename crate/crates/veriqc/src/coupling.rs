//! Device coupling maps: which qubit pairs admit a two-qubit gate.
//!
//! A map is a set of nodes plus edges, each edge optionally *directed*.
//! Direction constrains only CX orientation (control must sit on the edge
//! source); swaps are symmetric on any edge, because a swap in either
//! orientation is the same unitary. Routing needs the graph connected, and
//! the constructor enforces that.
//!
//! Shortest paths break ties lexicographically: among all shortest paths
//! from `a` to `b`, the one whose node sequence is smallest in dictionary
//! order wins. That makes every routing decision reproducible without
//! reference to hash-map iteration order.
//!
//! The JSON file format is `{"nodes": N, "edges": [[a, b], [a, b,
//! "directed"], ...]}`; an entry without the marker is bidirectional.

use serde::{Deserialize, Serialize};

use crate::circuit::Layout;
use crate::error::{Error, Result};

/// One edge; `directed` means CX control must be `a` and target `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub directed: bool,
}

/// An undirected-connectivity device graph with per-edge CX direction.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMap {
    nodes: usize,
    edges: Vec<Edge>,
    /// Sorted adjacency per node (ignoring direction).
    adjacency: Vec<Vec<usize>>,
}

impl CouplingMap {
    /// Build and validate: edge endpoints in range, no self-loops, graph
    /// connected (unless empty or single-node).
    pub fn new(nodes: usize, edges: Vec<Edge>) -> Result<CouplingMap> {
        let mut adjacency = vec![Vec::new(); nodes];
        for e in &edges {
            for node in [e.a, e.b] {
                if node >= nodes {
                    return Err(Error::NodeOutOfRange { node, nodes });
                }
            }
            if e.a == e.b {
                return Err(Error::MalformedCouplingMap {
                    msg: format!("self-loop on node {}", e.a),
                });
            }
            if !adjacency[e.a].contains(&e.b) {
                adjacency[e.a].push(e.b);
                adjacency[e.b].push(e.a);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let map = CouplingMap { nodes, edges, adjacency };
        if nodes > 1 {
            let dist = map.distances_from(0);
            if let Some(node) = dist.iter().position(|&d| d == usize::MAX) {
                return Err(Error::DisconnectedMap { node });
            }
        }
        Ok(map)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Undirected neighbor list of `q`, ascending.
    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    /// Whether some edge joins `a` and `b` in either orientation.
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.nodes && self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Whether a CX with this control/target orientation is allowed: any
    /// undirected edge, or a directed edge pointing control -> target.
    pub fn cx_allowed(&self, control: usize, target: usize) -> bool {
        self.edges.iter().any(|e| {
            (e.a == control && e.b == target)
                || (!e.directed && e.a == target && e.b == control)
        })
    }

    /// All edges as unordered pairs `(min, max)`, sorted and deduplicated:
    /// the canonical candidate list for swap insertion.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|e| (e.a.min(e.b), e.a.max(e.b)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// BFS distances from `from` (usize::MAX marks unreachable).
    fn distances_from(&self, from: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.nodes];
        let mut queue = std::collections::VecDeque::new();
        dist[from] = 0;
        queue.push_back(from);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// All-pairs hop distances; routing cost functions index this table
    /// instead of re-running BFS per gate.
    pub fn all_pairs_distances(&self) -> Vec<Vec<usize>> {
        (0..self.nodes).map(|s| self.distances_from(s)).collect()
    }

    /// Shortest path from `a` to `b` inclusive, lexicographically smallest
    /// among all shortest paths. Walks greedily toward `b`, at each step
    /// taking the smallest-index neighbor that stays on a shortest path.
    pub fn shortest_path(&self, a: usize, b: usize) -> Result<Vec<usize>> {
        for node in [a, b] {
            if node >= self.nodes {
                return Err(Error::NodeOutOfRange { node, nodes: self.nodes });
            }
        }
        let dist_to_b = self.distances_from(b);
        if dist_to_b[a] == usize::MAX {
            return Err(Error::DisconnectedMap { node: a });
        }
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let next = self.adjacency[cur]
                .iter()
                .copied()
                .find(|&v| dist_to_b[v] + 1 == dist_to_b[cur])
                .expect("a shortest-path successor exists while dist > 0");
            path.push(next);
            cur = next;
        }
        Ok(path)
    }

    // ----------------------------------------------------------------
    // Stock topologies
    // ----------------------------------------------------------------

    /// Undirected line 0-1-...-(n-1).
    pub fn line(n: usize) -> CouplingMap {
        let edges = (1..n).map(|i| Edge { a: i - 1, b: i, directed: false }).collect();
        CouplingMap::new(n, edges).expect("line is connected")
    }

    /// Undirected ring over `n >= 3` nodes.
    pub fn ring(n: usize) -> CouplingMap {
        assert!(n >= 3);
        let mut edges: Vec<Edge> =
            (1..n).map(|i| Edge { a: i - 1, b: i, directed: false }).collect();
        edges.push(Edge { a: n - 1, b: 0, directed: false });
        CouplingMap::new(n, edges).expect("ring is connected")
    }

    /// The 16-node IBM device graph (two rows of eight, directed CX).
    pub fn ibm16() -> CouplingMap {
        let pairs = [
            (1, 0),
            (1, 2),
            (2, 3),
            (3, 4),
            (3, 14),
            (5, 4),
            (6, 5),
            (6, 7),
            (6, 11),
            (7, 10),
            (8, 7),
            (9, 8),
            (9, 10),
            (11, 10),
            (12, 5),
            (12, 11),
            (12, 13),
            (13, 4),
            (13, 14),
            (15, 0),
            (15, 2),
            (15, 14),
        ];
        let edges = pairs
            .iter()
            .map(|&(a, b)| Edge { a, b, directed: true })
            .collect();
        CouplingMap::new(16, edges).expect("device graph is connected")
    }

    // ----------------------------------------------------------------
    // JSON files
    // ----------------------------------------------------------------

    pub fn from_json(text: &str) -> Result<CouplingMap> {
        let raw: RawMap = serde_json::from_str(text)?;
        let mut edges = Vec::with_capacity(raw.edges.len());
        for entry in raw.edges {
            edges.push(entry.into_edge()?);
        }
        CouplingMap::new(raw.nodes, edges)
    }

    pub fn to_json(&self) -> String {
        let raw = RawMap {
            nodes: self.nodes,
            edges: self.edges.iter().map(|e| RawEdge::from_edge(*e)).collect(),
        };
        serde_json::to_string_pretty(&raw).expect("static shape serializes")
    }

    /// Identity layout sized to a register on this device; errors if the
    /// register does not fit.
    pub fn identity_layout(&self, nqreg: usize) -> Result<Layout> {
        if nqreg > self.nodes {
            return Err(Error::RegisterLargerThanDevice { nqreg, nodes: self.nodes });
        }
        Ok(Layout::identity(nqreg))
    }
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    nodes: usize,
    edges: Vec<RawEdge>,
}

/// Edge entries are `[a, b]` or `[a, b, "directed"]` in the file.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawEdge {
    Plain((usize, usize)),
    Tagged((usize, usize, String)),
}

impl RawEdge {
    fn into_edge(self) -> Result<Edge> {
        match self {
            RawEdge::Plain((a, b)) => Ok(Edge { a, b, directed: false }),
            RawEdge::Tagged((a, b, tag)) if tag == "directed" => {
                Ok(Edge { a, b, directed: true })
            }
            RawEdge::Tagged((_, _, tag)) => Err(Error::MalformedCouplingMap {
                msg: format!("unknown edge tag {tag:?} (expected \"directed\")"),
            }),
        }
    }

    fn from_edge(e: Edge) -> RawEdge {
        if e.directed {
            RawEdge::Tagged((e.a, e.b, "directed".to_string()))
        } else {
            RawEdge::Plain((e.a, e.b))
        }
    }
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_graphs() {
        assert!(matches!(
            CouplingMap::new(2, vec![Edge { a: 0, b: 2, directed: false }]),
            Err(Error::NodeOutOfRange { node: 2, nodes: 2 })
        ));
        assert!(CouplingMap::new(2, vec![Edge { a: 0, b: 0, directed: false }]).is_err());
        // Two components: {0,1} and {2,3}.
        assert!(matches!(
            CouplingMap::new(
                4,
                vec![
                    Edge { a: 0, b: 1, directed: false },
                    Edge { a: 2, b: 3, directed: false }
                ]
            ),
            Err(Error::DisconnectedMap { .. })
        ));
    }

    #[test]
    fn direction_constrains_cx_only() {
        let m = CouplingMap::new(2, vec![Edge { a: 0, b: 1, directed: true }]).unwrap();
        assert!(m.cx_allowed(0, 1));
        assert!(!m.cx_allowed(1, 0));
        assert!(m.has_edge(1, 0), "undirected connectivity ignores direction");

        let u = CouplingMap::line(2);
        assert!(u.cx_allowed(0, 1));
        assert!(u.cx_allowed(1, 0));
    }

    #[test]
    fn shortest_path_prefers_lexicographic() {
        // Diamond: 0-1-3 and 0-2-3 both length 2; the 0,1,3 path wins.
        let m = CouplingMap::new(
            4,
            vec![
                Edge { a: 0, b: 1, directed: false },
                Edge { a: 0, b: 2, directed: false },
                Edge { a: 1, b: 3, directed: false },
                Edge { a: 2, b: 3, directed: false },
            ],
        )
        .unwrap();
        assert_eq!(m.shortest_path(0, 3).unwrap(), vec![0, 1, 3]);
        assert_eq!(m.shortest_path(3, 0).unwrap(), vec![3, 1, 0]);
        assert_eq!(m.shortest_path(2, 2).unwrap(), vec![2]);
    }

    /// Spot-checked hop distances on the 16-node device, verified by hand
    /// against the edge list; the routing cost model depends on these.
    #[test]
    fn ibm16_distances() {
        let m = CouplingMap::ibm16();
        let d = m.all_pairs_distances();
        assert_eq!(d[0][8], 8);
        assert_eq!(d[7][15], 6);
        assert_eq!(d[0][15], 1);
        assert_eq!(d[8][7], 1);
        assert_eq!(d[0][7], 7);
        assert_eq!(d[8][15], 7);
        assert_eq!(d[7][2], 5);
        assert_eq!(d[2][8], 6);
        assert_eq!(d[6][15], 5);
        assert_eq!(d[10][15], 5);
        assert_eq!(d[1][15], 2);
        assert_eq!(d[2][15], 1);
        // Distances are symmetric even though CX direction is not.
        for a in 0..16 {
            for b in 0..16 {
                assert_eq!(d[a][b], d[b][a]);
            }
        }
    }

    #[test]
    fn json_round_trip_preserves_direction() {
        let m = CouplingMap::ibm16();
        let text = m.to_json();
        let back = CouplingMap::from_json(&text).unwrap();
        assert_eq!(m, back);

        let plain = CouplingMap::from_json(r#"{"nodes": 3, "edges": [[0,1],[1,2,"directed"]]}"#)
            .unwrap();
        assert!(!plain.edges()[0].directed);
        assert!(plain.edges()[1].directed);
        assert!(CouplingMap::from_json(r#"{"nodes": 2, "edges": [[0,1,"weird"]]}"#).is_err());
    }

    #[test]
    fn path_endpoints_and_adjacency() {
        let m = CouplingMap::ibm16();
        let p = m.shortest_path(0, 8).unwrap();
        assert_eq!(p.first(), Some(&0));
        assert_eq!(p.last(), Some(&8));
        assert_eq!(p.len(), 9);
        for w in p.windows(2) {
            assert!(m.has_edge(w[0], w[1]));
        }
    }
}
