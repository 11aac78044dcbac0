//! Reciprocal graphs over genes, the edge-subset model space spanned by a
//! prior pathway, moralization, and the exchangeable beta-binomial prior on
//! graph size.

use std::collections::BTreeSet;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};

/// Index of a gene; node `i` is row `i` of the expression matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A directed edge `src -> dst`. In the structural equations the edge
/// `k -> i` carries the coefficient `beta[i][k]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub src: NodeId,
    pub dst: NodeId,
}

impl DirectedEdge {
    pub fn new(src: usize, dst: usize) -> Self {
        DirectedEdge {
            src: NodeId(src),
            dst: NodeId(dst),
        }
    }
}

/// Directed graph admitting cycles and reciprocal pairs. Edges keep their
/// insertion order; parent and child lists are kept sorted by node index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReciprocalGraph {
    p: usize,
    edges: IndexSet<DirectedEdge>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
}

impl ReciprocalGraph {
    pub fn empty(p: usize) -> Self {
        ReciprocalGraph {
            p,
            edges: IndexSet::new(),
            parents: vec![Vec::new(); p],
            children: vec![Vec::new(); p],
        }
    }

    /// Builds a graph from an edge list, rejecting self-loops, endpoints out
    /// of range and duplicates.
    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = DirectedEdge>) -> Result<Self> {
        let mut g = Self::empty(p);
        for e in edges {
            if !g.insert(e)? {
                return Err(Error::Invalid(format!("duplicate edge {} -> {}", e.src.0, e.dst.0)));
            }
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.p
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = &DirectedEdge> + '_ {
        self.edges.iter()
    }

    pub fn contains(&self, e: &DirectedEdge) -> bool {
        self.edges.contains(e)
    }

    fn check_node(&self, i: NodeId) -> Result<()> {
        if i.0 >= self.p {
            Err(Error::NodeOutOfRange { index: i.0, p: self.p })
        } else {
            Ok(())
        }
    }

    /// Inserts an edge. Returns `false` if it was already present.
    pub fn insert(&mut self, e: DirectedEdge) -> Result<bool> {
        self.check_node(e.src)?;
        self.check_node(e.dst)?;
        if e.src == e.dst {
            return Err(Error::Invalid(format!("self-loop on node {}", e.src.0)));
        }
        if !self.edges.insert(e) {
            return Ok(false);
        }
        insert_sorted(&mut self.parents[e.dst.0], e.src);
        insert_sorted(&mut self.children[e.src.0], e.dst);
        Ok(true)
    }

    /// Removes an edge. Returns `false` if it was absent.
    pub fn remove(&mut self, e: &DirectedEdge) -> bool {
        if !self.edges.shift_remove(e) {
            return false;
        }
        remove_sorted(&mut self.parents[e.dst.0], e.src);
        remove_sorted(&mut self.children[e.src.0], e.dst);
        true
    }

    /// All `k` with `k -> i`, ascending.
    pub fn parents(&self, i: NodeId) -> Result<&[NodeId]> {
        self.check_node(i)?;
        Ok(&self.parents[i.0])
    }

    /// All `c` with `i -> c`, ascending.
    pub fn children(&self, i: NodeId) -> Result<&[NodeId]> {
        self.check_node(i)?;
        Ok(&self.children[i.0])
    }

    // Unchecked accessors for the sampler's inner loops.
    pub(crate) fn parents_of(&self, i: usize) -> &[NodeId] {
        &self.parents[i]
    }

    pub(crate) fn children_of(&self, i: usize) -> &[NodeId] {
        &self.children[i]
    }

    /// Number of distinct neighbours of `i`, ignoring direction.
    pub fn degree(&self, i: NodeId) -> Result<usize> {
        self.check_node(i)?;
        Ok(count_union(&self.parents[i.0], &self.children[i.0]))
    }

    pub fn is_subgraph(&self, g0: &PriorGraph) -> Result<bool> {
        if self.p != g0.graph.p {
            return Err(Error::Dimension(format!(
                "graph has {} nodes, prior graph has {}",
                self.p, g0.graph.p
            )));
        }
        Ok(self.edges.iter().all(|e| g0.graph.contains(e)))
    }

    pub fn moralize(&self) -> UndirectedGraph {
        let mut out = UndirectedGraph::empty(self.p);
        for e in &self.edges {
            out.insert(e.src.0, e.dst.0);
        }
        for pa in &self.parents {
            for (a, &u) in pa.iter().enumerate() {
                for &v in &pa[a + 1..] {
                    out.insert(u.0, v.0);
                }
            }
        }
        out
    }
}

fn insert_sorted(v: &mut Vec<NodeId>, x: NodeId) {
    if let Err(pos) = v.binary_search(&x) {
        v.insert(pos, x);
    }
}

fn remove_sorted(v: &mut Vec<NodeId>, x: NodeId) {
    if let Ok(pos) = v.binary_search(&x) {
        v.remove(pos);
    }
}

/// Size of the union of two sorted, duplicate-free lists.
fn count_union(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
        n += 1;
    }
    n + (a.len() - i) + (b.len() - j)
}

/// The prior pathway `G0`. Every graph visited by the sampler is an edge
/// subset of it, and edges are addressed by their position in `G0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorGraph {
    graph: ReciprocalGraph,
}

impl PriorGraph {
    pub fn new(graph: ReciprocalGraph) -> Self {
        PriorGraph { graph }
    }

    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = DirectedEdge>) -> Result<Self> {
        ReciprocalGraph::from_edges(p, edges).map(Self::new)
    }

    pub fn graph(&self) -> &ReciprocalGraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.p
    }

    /// `K = |E0|`.
    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn edge(&self, index: usize) -> DirectedEdge {
        *self.graph.edges.get_index(index).expect("edge index in range")
    }

    pub fn edge_index(&self, e: &DirectedEdge) -> Option<usize> {
        self.graph.edges.get_index_of(e)
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = &DirectedEdge> + '_ {
        self.graph.edges()
    }
}

/// Undirected graph stored as normalized pairs `(a, b)` with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn empty(p: usize) -> Self {
        UndirectedGraph {
            p,
            edges: BTreeSet::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.p
    }

    /// Adds `{a, b}`; self-pairs are ignored.
    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        self.edges.insert((a.min(b), a.max(b)))
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, a: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(u, v)| {
                if u == a {
                    Some(v)
                } else if v == a {
                    Some(u)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Views the undirected graph as a reciprocal graph with both
    /// orientations of every pair.
    pub fn to_symmetric_directed(&self) -> ReciprocalGraph {
        let mut g = ReciprocalGraph::empty(self.p);
        for &(a, b) in &self.edges {
            g.insert(DirectedEdge::new(a, b)).expect("valid pair");
            g.insert(DirectedEdge::new(b, a)).expect("valid pair");
        }
        g
    }
}

/// Beta hyperparameters of the common edge-inclusion probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructurePriorParams {
    pub a_phi: f64,
    pub b_phi: f64,
}

impl Default for StructurePriorParams {
    fn default() -> Self {
        StructurePriorParams { a_phi: 1.0, b_phi: 1.0 }
    }
}

impl StructurePriorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_phi > 0.0 && self.b_phi > 0.0 && self.a_phi.is_finite() && self.b_phi.is_finite()) {
            return Err(Error::Invalid(format!(
                "structure prior needs a_phi, b_phi > 0 (got {}, {})",
                self.a_phi, self.b_phi
            )));
        }
        Ok(())
    }
}

/// Log prior probability of one particular graph with `k` of the `total`
/// prior edges, with the inclusion probability integrated out:
/// `B(k + a, K - k + b) / B(a, b)`.
pub fn log_structure_prior(k: usize, total: usize, prior: &StructurePriorParams) -> Result<f64> {
    if k > total {
        return Err(Error::Invalid(format!(
            "edge count {k} exceeds prior edge count {total}"
        )));
    }
    prior.validate()?;
    let (a, b) = (prior.a_phi, prior.b_phi);
    Ok(ln_beta(k as f64 + a, (total - k) as f64 + b) - ln_beta(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(p: usize, edges: &[(usize, usize)]) -> ReciprocalGraph {
        ReciprocalGraph::from_edges(p, edges.iter().map(|&(a, b)| DirectedEdge::new(a, b))).unwrap()
    }

    fn ids(v: &[NodeId]) -> Vec<usize> {
        v.iter().map(|n| n.0).collect()
    }

    #[test]
    fn parents_lookup() {
        assert_eq!(ids(g(3, &[(1, 0), (2, 0)]).parents(NodeId(0)).unwrap()), vec![1, 2]);
        assert!(g(1, &[]).parents(NodeId(0)).unwrap().is_empty());
        assert_eq!(ids(g(2, &[(0, 1), (1, 0)]).parents(NodeId(1)).unwrap()), vec![0]);
        // insertion order does not leak into the parent order
        assert_eq!(ids(g(3, &[(2, 0), (1, 0)]).parents(NodeId(0)).unwrap()), vec![1, 2]);
    }

    #[test]
    fn out_of_range_node() {
        let gr = g(2, &[]);
        assert!(matches!(
            gr.parents(NodeId(2)),
            Err(Error::NodeOutOfRange { index: 2, p: 2 })
        ));
        assert!(gr.degree(NodeId(5)).is_err());
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(ReciprocalGraph::from_edges(2, [DirectedEdge::new(1, 1)]).is_err());
        assert!(ReciprocalGraph::from_edges(2, [DirectedEdge::new(0, 1), DirectedEdge::new(0, 1)]).is_err());
        assert!(ReciprocalGraph::from_edges(2, [DirectedEdge::new(0, 2)]).is_err());
    }

    #[test]
    fn moralize_examples() {
        let m = g(2, &[(0, 1)]).moralize();
        assert_eq!(m.edges().collect::<Vec<_>>(), vec![(0, 1)]);

        let m = g(3, &[(0, 2), (1, 2)]).moralize();
        assert_eq!(m.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    /// Four-node cycle with a reciprocal pair: nodes 1 and 2 end up
    /// non-adjacent in the moral graph and separated by {3, 4}.
    #[test]
    fn moralize_four_cycle_markov_property() {
        // node labels 1..4 mapped to indices 0..3
        let gr = g(4, &[(0, 2), (2, 0), (2, 1), (1, 3), (3, 0)]);
        let m = gr.moralize();
        assert!(!m.is_adjacent(0, 1));
        // every path from 1 to 2 passes through 3 or 4
        let blocked = [2usize, 3];
        let mut seen = [false; 4];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in m.neighbors(u) {
                if !seen[v] && !blocked.contains(&v) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        assert!(!seen[1]);
    }

    #[test]
    fn degree_examples() {
        assert_eq!(g(3, &[(1, 2)]).degree(NodeId(0)).unwrap(), 0);
        assert_eq!(g(2, &[(0, 1), (1, 0)]).degree(NodeId(0)).unwrap(), 1);
        assert_eq!(g(4, &[(0, 1), (2, 1), (1, 3)]).degree(NodeId(1)).unwrap(), 3);
    }

    #[test]
    fn subgraph_examples() {
        let g0 = PriorGraph::new(g(3, &[(0, 1), (1, 2), (2, 0)]));
        assert!(g0.graph().clone().is_subgraph(&g0).unwrap());
        assert!(ReciprocalGraph::empty(3).is_subgraph(&g0).unwrap());
        assert!(!g(3, &[(0, 1), (1, 0)]).is_subgraph(&g0).unwrap());
        assert!(ReciprocalGraph::empty(4).is_subgraph(&g0).is_err());
    }

    #[test]
    fn structure_prior_examples() {
        let uniform = StructurePriorParams::default();
        assert_eq!(log_structure_prior(0, 0, &uniform).unwrap(), 0.0);
        // B(2, 3) / B(1, 1) = 1!2!/4! = 1/12
        let v = log_structure_prior(1, 3, &uniform).unwrap();
        assert!((v - (1.0f64 / 12.0).ln()).abs() < 1e-12);
        assert!(log_structure_prior(4, 3, &uniform).is_err());
        assert!(log_structure_prior(0, 3, &StructurePriorParams { a_phi: 0.0, b_phi: 1.0 }).is_err());
    }

    #[test]
    fn remove_keeps_order() {
        let mut gr = g(4, &[(0, 1), (2, 3), (1, 2)]);
        assert!(gr.remove(&DirectedEdge::new(2, 3)));
        assert!(!gr.remove(&DirectedEdge::new(2, 3)));
        let order: Vec<_> = gr.edges().map(|e| (e.src.0, e.dst.0)).collect();
        assert_eq!(order, vec![(0, 1), (1, 2)]);
        assert!(gr.children(NodeId(2)).unwrap().is_empty());
    }
}
