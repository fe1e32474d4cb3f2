//! Private neighborhood trees: for every node `u` a tree `T(u)` in `G - u`
//! spanning all neighbors of `u`.
//!
//! Construction runs `ceil(log2 Δ)` phases. Each node starts with one
//! component per neighbor. A phase builds an auxiliary graph with one virtual
//! copy of `u` per current component of `u`, covers it with cycles, projects
//! the cycles back into `G`, and regrows each node's forest inside the union of
//! the projected cycles through that node. Every covering cycle of a virtual
//! edge `(u, ũ_j)` leaves `u` through another copy, so it joins component `j`
//! to a different component and the component count at least halves.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycle_cover::{build_cycle_cover, Cycle};
use crate::error::{Error, Result};
use crate::graph::{edge, Edge, Graph, NodeId};

/// A tree given by parent links; the root is its own parent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootedTree {
    pub root: NodeId,
    pub parent: BTreeMap<NodeId, NodeId>,
}

impl RootedTree {
    pub fn singleton(v: NodeId) -> Self {
        RootedTree {
            root: v,
            parent: BTreeMap::from([(v, v)]),
        }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.parent.contains_key(&v)
    }

    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.parent.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.parent
            .iter()
            .filter(|(c, p)| c != p)
            .map(|(&c, &p)| edge(c, p))
    }

    pub fn children(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&c, &p) in &self.parent {
            if c != p {
                out.entry(p).or_default().push(c);
            }
        }
        out
    }

    /// Depth of every member, or `None` if the parent links do not form a
    /// tree hanging from the root.
    pub fn depths(&self) -> Option<BTreeMap<NodeId, usize>> {
        if self.parent.get(&self.root) != Some(&self.root) {
            return None;
        }
        let children = self.children();
        let mut depth = BTreeMap::from([(self.root, 0)]);
        let mut queue = VecDeque::from([self.root]);
        while let Some(v) = queue.pop_front() {
            for &c in children.get(&v).into_iter().flatten() {
                if depth.insert(c, depth[&v] + 1).is_some() {
                    return None;
                }
                queue.push_back(c);
            }
        }
        (depth.len() == self.parent.len()).then_some(depth)
    }

    pub fn max_depth(&self) -> usize {
        self.depths()
            .map(|d| d.values().copied().max().unwrap_or(0))
            .unwrap_or(usize::MAX)
    }

    /// Path from `v` up to the root.
    pub fn path_to_root(&self, mut v: NodeId) -> Vec<NodeId> {
        let mut path = vec![v];
        while v != self.root {
            v = self.parent[&v];
            path.push(v);
        }
        path
    }

    /// Restriction to the union of root paths of `keep`.
    pub fn pruned_to(&self, keep: impl IntoIterator<Item = NodeId>) -> RootedTree {
        let mut parent = BTreeMap::new();
        for v in keep {
            for w in self.path_to_root(v) {
                if parent.insert(w, self.parent[&w]).is_some() {
                    break;
                }
            }
        }
        RootedTree {
            root: self.root,
            parent,
        }
    }
}

/// The forest a node `owner` holds during construction; every neighbor of the
/// owner lies in exactly one component. Components are ordered by their lowest
/// neighbor id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forest {
    pub owner: NodeId,
    pub components: Vec<RootedTree>,
}

impl Forest {
    pub fn initial(g: &Graph, owner: NodeId) -> Self {
        Forest {
            owner,
            components: g.neighbors(owner).iter().map(|&v| RootedTree::singleton(v)).collect(),
        }
    }

    pub fn component_of(&self, v: NodeId) -> Option<usize> {
        self.components.iter().position(|c| c.contains(v))
    }

    fn validate(&self, g: &Graph) -> Result<()> {
        let u = self.owner;
        if self.components.iter().any(|c| c.contains(u)) {
            return Err(Error::Structural(format!("forest of {u} contains its owner")));
        }
        for &v in g.neighbors(u) {
            let hits = self.components.iter().filter(|c| c.contains(v)).count();
            if hits != 1 {
                return Err(Error::Structural(format!(
                    "neighbor {v} of {u} lies in {hits} components"
                )));
            }
        }
        Ok(())
    }
}

/// What an auxiliary edge stands for in the base graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuxEdgeKind {
    /// The real edge `(u, v)`.
    Real(Edge),
    /// `(u, ũ_j)`, contracted to `u`.
    Contraction(NodeId),
}

/// Auxiliary graph of one phase. Ids `0..n` are the real nodes; virtual copies
/// follow, grouped by owner and component index.
#[derive(Clone, Debug)]
pub struct AuxGraph {
    pub graph: Graph,
    pub real_nodes: usize,
    /// aux id -> (real node, component index) for virtual nodes.
    pub virtual_of: Vec<Option<(NodeId, usize)>>,
    /// real node -> its virtual copies (empty when the node has one component).
    pub copies: Vec<Vec<NodeId>>,
    pub edge_map: HashMap<Edge, AuxEdgeKind>,
}

impl AuxGraph {
    pub fn real_of(&self, a: NodeId) -> NodeId {
        match self.virtual_of[a] {
            Some((u, _)) => u,
            None => a,
        }
    }
}

/// One virtual node per component for every node with at least two
/// components; a node with a single component stays itself, which avoids
/// the bridge `(u, ũ_1)`.
pub fn build_auxiliary_graph(g: &Graph, forests: &[Forest]) -> Result<AuxGraph> {
    let n = g.node_count();
    if forests.len() != n {
        return Err(Error::Structural(format!(
            "{} forests for {n} nodes",
            forests.len()
        )));
    }
    for f in forests {
        f.validate(g)?;
    }
    let mut virtual_of: Vec<Option<(NodeId, usize)>> = vec![None; n];
    let mut copies = vec![Vec::new(); n];
    let mut edges = Vec::new();
    let mut edge_map = HashMap::new();
    for (u, f) in forests.iter().enumerate() {
        if f.components.len() >= 2 {
            for j in 0..f.components.len() {
                let id = virtual_of.len();
                virtual_of.push(Some((u, j)));
                copies[u].push(id);
                edges.push((u, id));
                edge_map.insert(edge(u, id), AuxEdgeKind::Contraction(u));
            }
        }
    }
    let side = |u: NodeId, v: NodeId| -> NodeId {
        if copies[u].is_empty() {
            u
        } else {
            copies[u][forests[u].component_of(v).expect("validated")]
        }
    };
    for &(u, v) in g.edges() {
        let (a, b) = (side(u, v), side(v, u));
        edges.push((a, b));
        edge_map.insert(edge(a, b), AuxEdgeKind::Real((u, v)));
    }
    Ok(AuxGraph {
        graph: Graph::new(virtual_of.len(), edges)?,
        real_nodes: n,
        virtual_of,
        copies,
        edge_map,
    })
}

/// Maps an auxiliary cycle to a closed walk in the base graph: contraction
/// edges disappear and virtual endpoints become their owners.
pub fn project_cycle(aux_cycle: &Cycle, aux: &AuxGraph) -> Result<Vec<NodeId>> {
    let mut walk: Vec<NodeId> = Vec::with_capacity(aux_cycle.len());
    for (a, b) in aux_cycle.edges() {
        match aux.edge_map.get(&(a, b)) {
            None => {
                return Err(Error::Structural(format!(
                    "aux edge ({a}, {b}) has no mapping"
                )))
            }
            Some(_) => {}
        }
    }
    for &a in &aux_cycle.nodes {
        let r = aux.real_of(a);
        if walk.last() != Some(&r) {
            walk.push(r);
        }
    }
    while walk.len() > 1 && walk.first() == walk.last() {
        walk.pop();
    }
    Ok(walk)
}

fn walk_edges(walk: &[NodeId]) -> impl Iterator<Item = Edge> + '_ {
    let k = walk.len();
    (0..k).map(move |i| edge(walk[i], walk[(i + 1) % k]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateTrees {
    /// `trees[u]` is `T(u)`.
    pub trees: Vec<RootedTree>,
    /// Twice the largest tree depth.
    pub dilation: usize,
    /// Largest number of trees sharing one graph edge.
    pub congestion: usize,
}

impl PrivateTrees {
    pub fn from_trees(g: &Graph, trees: Vec<RootedTree>) -> Self {
        let (dilation, congestion) = measure(g, &trees);
        PrivateTrees {
            trees,
            dilation,
            congestion,
        }
    }

    pub fn tree(&self, u: NodeId) -> &RootedTree {
        &self.trees[u]
    }

    /// JSON object `u -> {root, parent: [[child, parent], ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .trees
            .iter()
            .enumerate()
            .map(|(u, t)| {
                let pairs: Vec<[NodeId; 2]> = t.parent.iter().map(|(&c, &p)| [c, p]).collect();
                (
                    u.to_string(),
                    serde_json::json!({ "root": t.root, "parent": pairs }),
                )
            })
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_json(g: &Graph, value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Entry {
            root: NodeId,
            parent: Vec<[NodeId; 2]>,
        }
        let map: BTreeMap<NodeId, Entry> = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidInput(format!("trees JSON: {e}")))?;
        if map.len() != g.node_count() || map.keys().copied().ne(g.nodes()) {
            return Err(Error::InvalidInput("trees JSON must list every node once".into()));
        }
        let trees = map
            .into_values()
            .map(|e| RootedTree {
                root: e.root,
                parent: e.parent.into_iter().map(|[c, p]| (c, p)).collect(),
            })
            .collect();
        Ok(PrivateTrees::from_trees(g, trees))
    }
}

fn measure(g: &Graph, trees: &[RootedTree]) -> (usize, usize) {
    let dilation = trees
        .iter()
        .map(|t| t.max_depth().saturating_mul(2))
        .max()
        .unwrap_or(0);
    let mut load = vec![0usize; g.edge_count()];
    for t in trees {
        for (u, v) in t.edges() {
            if let Some(i) = g.edge_index(u, v) {
                load[i] += 1;
            }
        }
    }
    (dilation, load.into_iter().max().unwrap_or(0))
}

/// Per-phase measurements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub phase: usize,
    /// Component counts per node before and after the phase.
    pub components_before: Vec<usize>,
    pub components_after: Vec<usize>,
    pub aux_nodes: usize,
    pub aux_edges: usize,
    pub aux_cover_dilation: usize,
    pub aux_cover_congestion: usize,
    /// Longest projected walk (in base-graph edges).
    pub projected_dilation: usize,
    /// Largest number of projected walks through one base-graph edge.
    pub projected_congestion: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub phases: Vec<PhaseStats>,
    /// Auxiliary graph of every executed phase (kept only when requested).
    pub aux_graphs: Vec<Graph>,
    /// `ceil(log2 Δ)`.
    pub phase_budget: usize,
}

impl Trace {
    /// Largest projected cover dilation and congestion over all phases.
    pub fn cover_parameters(&self) -> (usize, usize) {
        let d = self.phases.iter().map(|p| p.projected_dilation).max().unwrap_or(0);
        let c = self.phases.iter().map(|p| p.projected_congestion).max().unwrap_or(0);
        (d, c)
    }
}

pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

pub fn build_private_trees(g: &Graph) -> Result<PrivateTrees> {
    build_private_trees_traced(g, false).map(|(pt, _)| pt)
}

pub fn build_private_trees_traced(g: &Graph, keep_aux: bool) -> Result<(PrivateTrees, Trace)> {
    if g.node_count() < 3 || !g.is_two_vertex_connected()? {
        return Err(Error::NotTwoVertexConnected);
    }
    let n = g.node_count();
    let budget = ceil_log2(g.max_degree());
    let mut trace = Trace {
        phase_budget: budget,
        ..Trace::default()
    };
    let mut forests: Vec<Forest> = g.nodes().map(|u| Forest::initial(g, u)).collect();
    let mut union: Vec<BTreeSet<Edge>> = vec![BTreeSet::new(); n];

    for phase in 1..=budget {
        let before: Vec<usize> = forests.iter().map(|f| f.components.len()).collect();
        if before.iter().all(|&c| c == 1) {
            break;
        }
        let aux = build_auxiliary_graph(g, &forests)?;
        let cover = build_cycle_cover(&aux.graph).map_err(|e| Error::Construction {
            phase,
            msg: format!("auxiliary cycle cover failed: {e}"),
        })?;
        let walks = cover
            .cycles
            .iter()
            .map(|c| project_cycle(c, &aux))
            .collect::<Result<Vec<_>>>()?;

        let mut load: HashMap<Edge, usize> = HashMap::new();
        for w in &walks {
            let distinct: BTreeSet<Edge> = walk_edges(w).collect();
            for e in distinct {
                *load.entry(e).or_insert(0) += 1;
            }
            let on_walk: BTreeSet<NodeId> = w.iter().copied().collect();
            for &u in &on_walk {
                if before[u] < 2 {
                    continue;
                }
                union[u].extend(walk_edges(w).filter(|&(a, b)| a != u && b != u));
            }
        }

        for u in g.nodes() {
            if before[u] < 2 {
                continue;
            }
            forests[u] = regrow_forest(g, u, &union[u]);
            let after = forests[u].components.len();
            if after > before[u] / 2 {
                return Err(Error::Construction {
                    phase,
                    msg: format!(
                        "node {u}: components went from {} to {after}, a virtual edge was not joined",
                        before[u]
                    ),
                });
            }
        }

        trace.phases.push(PhaseStats {
            phase,
            components_before: before,
            components_after: forests.iter().map(|f| f.components.len()).collect(),
            aux_nodes: aux.graph.node_count(),
            aux_edges: aux.graph.edge_count(),
            aux_cover_dilation: cover.dilation,
            aux_cover_congestion: cover.congestion,
            projected_dilation: walks.iter().map(Vec::len).max().unwrap_or(0),
            projected_congestion: load.values().copied().max().unwrap_or(0),
        });
        if keep_aux {
            trace.aux_graphs.push(aux.graph);
        }
    }

    let mut trees = Vec::with_capacity(n);
    for f in forests {
        match <[RootedTree; 1]>::try_from(f.components) {
            Ok([t]) => trees.push(t),
            Err(c) => {
                return Err(Error::Construction {
                    phase: budget,
                    msg: format!("node {} still has {} components", f.owner, c.len()),
                })
            }
        }
    }
    Ok((PrivateTrees::from_trees(g, trees), trace))
}

/// BFS from the lowest-id neighbor of each component of `edges` (which avoid
/// `u`), pruned down to the root paths of the neighbors.
fn regrow_forest(g: &Graph, u: NodeId, edges: &BTreeSet<Edge>) -> Forest {
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut assigned: BTreeSet<NodeId> = BTreeSet::new();
    let mut components = Vec::new();
    for &root in g.neighbors(u) {
        if assigned.contains(&root) {
            continue;
        }
        // neighbor lists are sorted, so parents are the lowest-id discoverers
        let mut parent = BTreeMap::from([(root, root)]);
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in adj.get(&x).into_iter().flatten() {
                if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(y) {
                    e.insert(x);
                    queue.push_back(y);
                }
            }
        }
        let tree = RootedTree { root, parent };
        let nbrs: Vec<NodeId> = g
            .neighbors(u)
            .iter()
            .copied()
            .filter(|&v| tree.contains(v))
            .collect();
        assigned.extend(nbrs.iter().copied());
        components.push(tree.pruned_to(nbrs));
    }
    Forest {
        owner: u,
        components,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreesReport {
    pub valid: bool,
    pub dilation: usize,
    pub congestion: usize,
    pub violations: Vec<String>,
}

/// Checks every invariant from scratch, per node in parallel.
pub fn verify_private_trees(g: &Graph, pt: &PrivateTrees) -> TreesReport {
    let mut violations: Vec<String> = if pt.trees.len() != g.node_count() {
        vec![format!(
            "expected {} trees, found {}",
            g.node_count(),
            pt.trees.len()
        )]
    } else {
        Vec::new()
    };
    let per_node: Vec<Vec<String>> = pt
        .trees
        .par_iter()
        .enumerate()
        .map(|(u, t)| {
            let mut v = Vec::new();
            if u >= g.node_count() {
                return v;
            }
            if t.contains(u) {
                v.push(format!("root-in-tree at u={u}"));
            }
            for &w in g.neighbors(u) {
                if !t.contains(w) {
                    v.push(format!("neighbor {w} missing from T({u})"));
                }
            }
            for (a, b) in t.edges() {
                if !g.has_edge(a, b) {
                    v.push(format!("T({u}) uses non-edge ({a}, {b})"));
                }
            }
            if t.depths().is_none() {
                v.push(format!("T({u}) is not a tree rooted at {}", t.root));
            }
            v
        })
        .collect();
    violations.extend(per_node.into_iter().flatten());
    let (dilation, congestion) = measure(g, &pt.trees);
    if dilation != pt.dilation {
        violations.push(format!("dilation field {} != measured {dilation}", pt.dilation));
    }
    if congestion != pt.congestion {
        violations.push(format!(
            "congestion field {} != measured {congestion}",
            pt.congestion
        ));
    }
    TreesReport {
        valid: violations.is_empty(),
        dilation,
        congestion,
        violations,
    }
}
