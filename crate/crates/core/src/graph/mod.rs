//! Simple undirected graphs over dense node ids `0..n`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod generate;
mod io;

pub use generate::{generate, Family};
pub use io::{parse_edge_list, to_edge_list};

pub type NodeId = usize;

/// Normalized undirected edge, `0 < 1`.
pub type Edge = (NodeId, NodeId);

pub fn edge(u: NodeId, v: NodeId) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    #[serde(skip)]
    adj: Vec<Vec<NodeId>>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, parallel edges and out-of-range ids.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at {u}")));
            }
            list.push(edge(u, v));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "parallel edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &list {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Graph { n, edges: list, adj })
    }

    pub fn cycle(n: usize) -> Self {
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle needs n >= 3")
    }

    pub fn path(n: usize) -> Self {
        Graph::new(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
    }

    pub fn complete(n: usize) -> Self {
        Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).expect("valid clique")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.n
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adj[u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj[u].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Position of the edge in [`Graph::edges`].
    pub fn edge_index(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.edges.binary_search(&edge(u, v)).ok()
    }

    /// Position of `v` in the sorted neighbor list of `u`.
    pub fn slot_of(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.adj[u].binary_search(&v).ok()
    }

    /// Restores adjacency after deserialization.
    pub fn rebuild(self) -> Result<Self> {
        Graph::new(self.n, self.edges)
    }

    /// Whether the graph stays connected after deleting `removed` (if any).
    pub fn is_connected_without(&self, removed: Option<NodeId>) -> bool {
        self.first_unreachable_without(removed).is_none()
    }

    fn first_unreachable_without(&self, removed: Option<NodeId>) -> Option<NodeId> {
        let Some(start) = (0..self.n).find(|&v| Some(v) != removed) else {
            return None;
        };
        let mut seen = vec![false; self.n];
        if let Some(r) = removed {
            seen[r] = true;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().position(|&s| !s)
    }

    pub fn is_connected(&self) -> bool {
        self.is_connected_without(None)
    }

    /// True iff deleting any single vertex leaves a connected graph.
    pub fn is_two_vertex_connected(&self) -> Result<bool> {
        if self.n < 3 {
            return Err(Error::InvalidInput(format!(
                "2-vertex connectivity needs n >= 3, got {}",
                self.n
            )));
        }
        Ok(self.is_connected() && self.articulation_points().is_empty())
    }

    /// Vertex-removal oracle: one BFS per deleted vertex.
    pub fn is_two_vertex_connected_brute(&self) -> Result<bool> {
        if self.n < 3 {
            return Err(Error::InvalidInput(format!(
                "2-vertex connectivity needs n >= 3, got {}",
                self.n
            )));
        }
        Ok(self.is_connected() && (0..self.n).all(|u| self.is_connected_without(Some(u))))
    }

    /// Cut vertices, by an iterative low-link DFS.
    pub fn articulation_points(&self) -> Vec<NodeId> {
        let n = self.n;
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut is_cut = vec![false; n];
        let mut time = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = time;
            low[root] = time;
            time += 1;
            let mut root_children = 0;
            // (node, parent, next neighbor index)
            let mut stack = vec![(root, usize::MAX, 0usize)];
            while let Some(top) = stack.last_mut() {
                let (u, parent) = (top.0, top.1);
                if top.2 < self.adj[u].len() {
                    let v = self.adj[u][top.2];
                    top.2 += 1;
                    if disc[v] == usize::MAX {
                        disc[v] = time;
                        low[v] = time;
                        time += 1;
                        if u == root {
                            root_children += 1;
                        }
                        stack.push((v, u, 0));
                    } else if v != parent {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if parent != usize::MAX {
                        low[parent] = low[parent].min(low[u]);
                        if parent != root && low[u] >= disc[parent] {
                            is_cut[parent] = true;
                        }
                    }
                }
            }
            if root_children > 1 {
                is_cut[root] = true;
            }
        }
        (0..n).filter(|&v| is_cut[v]).collect()
    }

    pub fn bfs_tree(&self, root: NodeId) -> Result<BfsTree> {
        if root >= self.n {
            return Err(Error::InvalidInput(format!("root {root} out of range")));
        }
        let dist = self.distances_from(root);
        if let Some(unreachable) = dist.iter().position(|d| d.is_none()) {
            return Err(Error::Disconnected { unreachable });
        }
        let depth: Vec<usize> = dist.into_iter().map(Option::unwrap).collect();
        let mut parent = vec![root; self.n];
        let mut order: Vec<NodeId> = (0..self.n).collect();
        order.sort_by_key(|&v| (depth[v], v));
        for &v in &order {
            if v != root {
                // lowest-id neighbor one level up
                parent[v] = *self.adj[v]
                    .iter()
                    .find(|&&w| depth[w] + 1 == depth[v])
                    .expect("bfs parent exists");
            }
        }
        Ok(BfsTree {
            root,
            parent,
            depth,
            order,
        })
    }

    /// Hop distances from `src`; `None` where unreachable.
    pub fn distances_from(&self, src: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn diameter(&self) -> Result<usize> {
        let mut best = 0;
        for u in 0..self.n {
            for (v, d) in self.distances_from(u).into_iter().enumerate() {
                match d {
                    Some(d) => best = best.max(d),
                    None => return Err(Error::Disconnected { unreachable: v }),
                }
            }
        }
        Ok(best)
    }
}

/// A BFS spanning tree: `parent[root] == root`, `depth` are hop distances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BfsTree {
    pub root: NodeId,
    pub parent: Vec<NodeId>,
    pub depth: Vec<usize>,
    /// Nodes sorted by (depth, id).
    pub order: Vec<NodeId>,
}

impl BfsTree {
    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Nodes on the tree path from `v` up to (and including) the root.
    pub fn path_to_root(&self, mut v: NodeId) -> Vec<NodeId> {
        let mut path = vec![v];
        while v != self.root {
            v = self.parent[v];
            path.push(v);
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::new(3, [(0, 0)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn two_vertex_connectivity_small_cases() {
        assert!(Graph::cycle(4).is_two_vertex_connected().unwrap());
        assert!(!Graph::path(3).is_two_vertex_connected().unwrap());
        let k4_minus = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        assert!(k4_minus.is_two_vertex_connected_brute().unwrap());
        assert!(k4_minus.is_two_vertex_connected().unwrap());
        assert!(matches!(
            Graph::path(2).is_two_vertex_connected(),
            Err(Error::InvalidInput(_))
        ));
        // two triangles sharing node 2
        let bowtie = Graph::new(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]).unwrap();
        assert_eq!(bowtie.articulation_points(), vec![2]);
        assert!(!bowtie.is_two_vertex_connected().unwrap());
    }

    #[test]
    fn bfs_depths() {
        let t = Graph::cycle(4).bfs_tree(0).unwrap();
        assert_eq!(t.depth, vec![0, 1, 2, 1]);
        assert_eq!(t.parent[2], 1);
        let k4 = Graph::complete(4).bfs_tree(0).unwrap();
        assert_eq!(k4.depth, vec![0, 1, 1, 1]);
        let disc = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(disc.bfs_tree(0), Err(Error::Disconnected { unreachable: 2 }));
        assert!(disc.diameter().is_err());
    }

    #[test]
    fn diameters() {
        assert_eq!(Graph::cycle(6).diameter().unwrap(), 3);
        assert_eq!(Graph::complete(4).diameter().unwrap(), 1);
        for n in 3..30 {
            assert_eq!(Graph::cycle(n).diameter().unwrap(), n / 2);
        }
    }
}
