//! Cycle covers of bridgeless graphs built from a BFS tree: every non-tree
//! edge closes its fundamental cycle; a bottom-up sweep then checks that every
//! tree edge has a crossing non-tree edge and records the shortest one.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edge, Edge, Graph, NodeId};

/// A simple cycle given by its node sequence; the closing edge is implicit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cycle {
    pub nodes: Vec<NodeId>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Consecutive pairs including the closing pair.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let k = self.nodes.len();
        (0..k).map(move |i| edge(self.nodes[i], self.nodes[(i + 1) % k]))
    }

    /// Rotation/reflection-invariant form used for deduplication.
    fn canonical(&self) -> Vec<NodeId> {
        let k = self.nodes.len();
        let start = (0..k).min_by_key(|&i| self.nodes[i]).unwrap_or(0);
        let fwd: Vec<_> = (0..k).map(|i| self.nodes[(start + i) % k]).collect();
        let bwd: Vec<_> = (0..k).map(|i| self.nodes[(start + k - i) % k]).collect();
        fwd.min(bwd)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCover {
    pub cycles: Vec<Cycle>,
    pub dilation: usize,
    pub congestion: usize,
}

impl CycleCover {
    pub fn from_cycles(cycles: Vec<Cycle>) -> Self {
        let dilation = cycles.iter().map(Cycle::len).max().unwrap_or(0);
        let congestion = edge_loads(&cycles).values().copied().max().unwrap_or(0);
        CycleCover {
            cycles,
            dilation,
            congestion,
        }
    }

    /// Bare JSON form: an array of node-id arrays.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.cycles).expect("cycles serialize")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let cycles: Vec<Cycle> = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidInput(format!("cycle cover JSON: {e}")))?;
        Ok(CycleCover::from_cycles(cycles))
    }
}

fn edge_loads(cycles: &[Cycle]) -> HashMap<Edge, usize> {
    let mut loads = HashMap::new();
    for c in cycles {
        for e in c.edges() {
            *loads.entry(e).or_insert(0) += 1;
        }
    }
    loads
}

pub fn build_cycle_cover(g: &Graph) -> Result<CycleCover> {
    if g.node_count() == 0 {
        return Ok(CycleCover::from_cycles(Vec::new()));
    }
    let tree = g.bfs_tree(0)?;
    let n = g.node_count();
    let is_tree_edge = |u: NodeId, v: NodeId| tree.parent[u] == v && u != tree.root || tree.parent[v] == u && v != tree.root;

    // Euler intervals for subtree membership.
    let mut children = vec![Vec::new(); n];
    for &v in &tree.order {
        if v != tree.root {
            children[tree.parent[v]].push(v);
        }
    }
    let mut tin = vec![0; n];
    let mut tout = vec![0; n];
    let mut clock = 0;
    let mut stack = vec![(tree.root, 0usize)];
    tin[tree.root] = clock;
    clock += 1;
    while let Some(top) = stack.last_mut() {
        let (u, i) = *top;
        if i < children[u].len() {
            top.1 += 1;
            let c = children[u][i];
            tin[c] = clock;
            clock += 1;
            stack.push((c, 0));
        } else {
            tout[u] = clock;
            stack.pop();
        }
    }
    let in_subtree = |x: NodeId, c: NodeId| tin[c] <= tin[x] && tin[x] < tout[c];

    let fundamental = |u: NodeId, v: NodeId| -> Cycle {
        let up = tree.path_to_root(u);
        let vp = tree.path_to_root(v);
        let on_v: BTreeSet<_> = vp.iter().copied().collect();
        let lca_pos = up.iter().position(|x| on_v.contains(x)).expect("common root");
        let lca = up[lca_pos];
        let mut nodes: Vec<NodeId> = up[..=lca_pos].to_vec();
        let v_pos = vp.iter().position(|&x| x == lca).unwrap();
        nodes.extend(vp[..v_pos].iter().rev());
        Cycle { nodes }
    };

    let non_tree: Vec<Edge> = g
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| !is_tree_edge(u, v))
        .collect();
    let mut cycles: Vec<Cycle> = non_tree.iter().map(|&(u, v)| fundamental(u, v)).collect();

    // Swap sweep, deepest tree edges first: each tree edge (parent(c), c)
    // needs a non-tree edge with exactly one endpoint below c.
    for &c in tree.order.iter().rev() {
        if c == tree.root {
            continue;
        }
        let swap = non_tree
            .iter()
            .enumerate()
            .filter(|(_, &(x, y))| in_subtree(x, c) != in_subtree(y, c))
            .min_by_key(|(i, &(x, y))| (cycles[*i].len(), x, y));
        if swap.is_none() {
            return Err(Error::Bridge(tree.parent[c].min(c), tree.parent[c].max(c)));
        }
    }

    let mut seen = BTreeSet::new();
    cycles.retain(|c| seen.insert(c.canonical()));
    Ok(CycleCover::from_cycles(cycles))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverReport {
    pub covered: bool,
    pub dilation: usize,
    pub congestion: usize,
    pub uncovered: Vec<Edge>,
}

/// Recomputes coverage, dilation and congestion from scratch.
pub fn verify_cycle_cover(g: &Graph, cc: &CycleCover) -> Result<CoverReport> {
    for c in &cc.cycles {
        if c.len() < 3 {
            return Err(Error::Structural(format!("cycle {:?} shorter than 3", c.nodes)));
        }
        let distinct: BTreeSet<_> = c.nodes.iter().collect();
        if distinct.len() != c.len() {
            return Err(Error::Structural(format!("cycle {:?} repeats a node", c.nodes)));
        }
        if let Some((u, v)) = c.edges().find(|&(u, v)| !g.has_edge(u, v)) {
            return Err(Error::Structural(format!(
                "cycle {:?} uses non-edge ({u}, {v})",
                c.nodes
            )));
        }
    }
    let loads = edge_loads(&cc.cycles);
    let uncovered: Vec<Edge> = g
        .edges()
        .iter()
        .copied()
        .filter(|e| !loads.contains_key(e))
        .collect();
    Ok(CoverReport {
        covered: uncovered.is_empty(),
        dilation: cc.cycles.iter().map(Cycle::len).max().unwrap_or(0),
        congestion: loads.values().copied().max().unwrap_or(0),
        uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta() -> Graph {
        // 0 and 1 joined through 2, 3 and 4
        Graph::new(5, [(0, 2), (2, 1), (0, 3), (3, 1), (0, 4), (4, 1)]).unwrap()
    }

    #[test]
    fn cycle_is_its_own_cover() {
        let g = Graph::cycle(5);
        let cc = build_cycle_cover(&g).unwrap();
        assert_eq!(cc.cycles.len(), 1);
        assert_eq!(cc.cycles[0].canonical(), vec![0, 1, 2, 3, 4]);
        assert_eq!((cc.dilation, cc.congestion), (5, 1));
        let r = verify_cycle_cover(&g, &cc).unwrap();
        assert_eq!(
            r,
            CoverReport {
                covered: true,
                dilation: 5,
                congestion: 1,
                uncovered: vec![]
            }
        );
    }

    #[test]
    fn empty_cover_covers_nothing() {
        let g = Graph::cycle(5);
        let r = verify_cycle_cover(&g, &CycleCover::from_cycles(vec![])).unwrap();
        assert!(!r.covered);
        assert_eq!((r.dilation, r.congestion), (0, 0));
        assert_eq!(r.uncovered.len(), 5);
    }

    #[test]
    fn k4_uses_triangles() {
        let g = Graph::complete(4);
        let cc = build_cycle_cover(&g).unwrap();
        assert_eq!(cc.dilation, 3);
        assert!(verify_cycle_cover(&g, &cc).unwrap().covered);
    }

    #[test]
    fn theta_shares_one_path() {
        let g = theta();
        let cc = build_cycle_cover(&g).unwrap();
        assert_eq!(cc.cycles.len(), 2);
        assert!(cc.cycles.iter().all(|c| c.len() == 4));
        assert_eq!(cc.congestion, 2);
        assert!(verify_cycle_cover(&g, &cc).unwrap().covered);
    }

    #[test]
    fn bridge_is_named() {
        // two triangles joined by the bridge (2, 3)
        let g = Graph::new(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap();
        assert_eq!(build_cycle_cover(&g), Err(Error::Bridge(2, 3)));
    }

    #[test]
    fn non_edge_is_structural() {
        let g = Graph::cycle(5);
        let bad = CycleCover::from_cycles(vec![Cycle {
            nodes: vec![0, 1, 3],
        }]);
        assert!(matches!(verify_cycle_cover(&g, &bad), Err(Error::Structural(_))));
    }

    #[test]
    fn json_round_trip() {
        let cc = build_cycle_cover(&Graph::complete(4)).unwrap();
        let json = cc.to_json();
        assert!(json.is_array());
        assert_eq!(CycleCover::from_json(&json).unwrap(), cc);
    }
}
