//! Discrete and metric graphs, plus the directed-bond basis shared by the
//! evolution maps, the path-family systems, and the trace formula.
//!
//! Vertices are indexed `0..n` throughout the library; user-facing formats
//! (the CLI graph files) are 1-based and converted at the parser boundary.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Simple connected graph: vertex count, symmetric 0/1 adjacency, and an
/// ordered edge list with each pair stored as `(low, high)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteGraph {
    n: usize,
    adjacency: Vec<bool>,
    edges: Vec<(usize, usize)>,
}

impl DiscreteGraph {
    /// Builds a simple connected graph from an edge list.
    ///
    /// Rejects self-loops, duplicate edges, out-of-range vertex ids, and
    /// disconnected graphs, naming the offender in the error.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        let mut adjacency = vec![false; n * n];
        let mut stored = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if adjacency[lo * n + hi] {
                return Err(Error::InvalidGraph(format!("duplicate edge ({lo}, {hi})")));
            }
            adjacency[lo * n + hi] = true;
            adjacency[hi * n + lo] = true;
            stored.push((lo, hi));
        }
        let graph = DiscreteGraph {
            n,
            adjacency,
            edges: stored,
        };
        if let Some(v) = graph.first_unreachable() {
            return Err(Error::InvalidGraph(format!(
                "graph is disconnected: vertex {v} is not reachable from vertex 0"
            )));
        }
        Ok(graph)
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge list in construction order, each pair as `(low, high)`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Whether vertices `i` and `j` are adjacent.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.adjacency[i * self.n + j]
    }

    /// Vertex degree d_i.
    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.adjacency[i * self.n + j]).count()
    }

    /// Neighborhood of `i`, sorted ascending, optionally excluding one vertex.
    pub fn neighborhood(&self, i: usize, exclude: Option<usize>) -> Result<Vec<usize>> {
        if i >= self.n {
            return Err(Error::InvalidGraph(format!(
                "vertex {i} outside 0..{}",
                self.n
            )));
        }
        if let Some(x) = exclude {
            if x >= self.n {
                return Err(Error::InvalidGraph(format!(
                    "excluded vertex {x} outside 0..{}",
                    self.n
                )));
            }
        }
        Ok((0..self.n)
            .filter(|&j| self.adjacency[i * self.n + j] && Some(j) != exclude)
            .collect())
    }

    /// Index of the edge `{i, j}` in the edge list, if present.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.edges.iter().position(|&e| e == (lo, hi))
    }

    /// True when the graph has no cycles (|E| = n - 1 for connected graphs).
    pub fn is_tree(&self) -> bool {
        self.edges.len() == self.n - 1
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in 0..self.n {
                if self.adjacency[v * self.n + w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().position(|&s| !s)
    }
}

/// Entrance and exit vertices for an open (two-lead) graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leads {
    pub entrance: usize,
    pub exit: usize,
}

/// A discrete graph with a positive length per edge and optional leads.
///
/// Leads are vertex annotations, not extra edges: the bond basis stays at
/// 2|E| interior bonds and the lead channels enter only through the
/// lead-augmented vertex scattering matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    topology: DiscreteGraph,
    lengths: Vec<f64>,
    leads: Option<Leads>,
}

impl MetricGraph {
    /// Builds a metric graph; `lengths[e]` is the length of `topology.edges()[e]`.
    pub fn new(topology: DiscreteGraph, lengths: Vec<f64>, leads: Option<Leads>) -> Result<Self> {
        if lengths.len() != topology.edge_count() {
            return Err(Error::InvalidGraph(format!(
                "{} lengths supplied for {} edges",
                lengths.len(),
                topology.edge_count()
            )));
        }
        for (e, &len) in lengths.iter().enumerate() {
            if !(len > 0.0) || !len.is_finite() {
                let (i, j) = topology.edges()[e];
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has nonpositive or nonfinite length {len}"
                )));
            }
        }
        if let Some(Leads { entrance, exit }) = leads {
            let n = topology.vertex_count();
            if entrance >= n || exit >= n {
                return Err(Error::InvalidGraph(format!(
                    "lead vertices ({entrance}, {exit}) outside 0..{n}"
                )));
            }
            if entrance == exit {
                return Err(Error::InvalidGraph(
                    "entrance and exit leads must attach to distinct vertices".into(),
                ));
            }
        }
        Ok(MetricGraph {
            topology,
            lengths,
            leads,
        })
    }

    /// Convenience constructor for a closed graph.
    pub fn closed(topology: DiscreteGraph, lengths: Vec<f64>) -> Result<Self> {
        Self::new(topology, lengths, None)
    }

    pub fn topology(&self) -> &DiscreteGraph {
        &self.topology
    }

    pub fn vertex_count(&self) -> usize {
        self.topology.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.topology.edge_count()
    }

    /// Length of edge `e` (edge-list index).
    pub fn length(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn leads(&self) -> Option<Leads> {
        self.leads
    }

    /// Sum of edge lengths (each edge counted once).
    pub fn metric_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Whether `v` carries a lead.
    pub fn has_lead(&self, v: usize) -> bool {
        matches!(self.leads, Some(Leads { entrance, exit }) if entrance == v || exit == v)
    }
}

/// A directed bond (one traversal direction of an edge).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub tail: usize,
    pub head: usize,
    pub edge: usize,
}

/// Deterministic ordering of the 2|E| directed bonds.
///
/// Edge `e = {i, j}` with `i < j` contributes bond `2e` as `i -> j` and bond
/// `2e + 1` as `j -> i`, in edge-list order. `reverse` is the involution
/// `b ^ 1`. All matrices in this crate are reported in this basis.
#[derive(Debug, Clone)]
pub struct BondBasis {
    bonds: Vec<Bond>,
    index: HashMap<(usize, usize), usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl BondBasis {
    pub fn new(graph: &DiscreteGraph) -> Self {
        let n = graph.vertex_count();
        let mut bonds = Vec::with_capacity(2 * graph.edge_count());
        let mut index = HashMap::new();
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for (e, &(i, j)) in graph.edges().iter().enumerate() {
            for &(tail, head) in &[(i, j), (j, i)] {
                let b = bonds.len();
                bonds.push(Bond { tail, head, edge: e });
                index.insert((tail, head), b);
                outgoing[tail].push(b);
                incoming[head].push(b);
            }
        }
        BondBasis {
            bonds,
            index,
            outgoing,
            incoming,
        }
    }

    /// Number of directed bonds, 2|E|.
    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    pub fn bond(&self, b: usize) -> Bond {
        self.bonds[b]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Index of the bond `tail -> head`, if that edge exists.
    pub fn index_of(&self, tail: usize, head: usize) -> Option<usize> {
        self.index.get(&(tail, head)).copied()
    }

    /// The reversed bond; an involution.
    pub fn reverse(&self, b: usize) -> usize {
        b ^ 1
    }

    /// Bonds with tail at `v`.
    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.outgoing[v]
    }

    /// Bonds with head at `v`.
    pub fn incoming(&self, v: usize) -> &[usize] {
        &self.incoming[v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn star(n_leaves: usize) -> DiscreteGraph {
        let edges: Vec<(usize, usize)> = (1..=n_leaves).map(|j| (0, j)).collect();
        DiscreteGraph::new(n_leaves + 1, &edges).unwrap()
    }

    #[test]
    fn single_edge_adjacency() {
        let g = DiscreteGraph::new(2, &[(0, 1)]).unwrap();
        assert!(g.adjacent(0, 1));
        assert!(g.adjacent(1, 0));
        assert!(!g.adjacent(0, 0));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn star_degrees() {
        let g = star(3); // S_4: one center of degree 3, three leaves of degree 1
        assert_eq!(g.degree(0), 3);
        for leaf in 1..4 {
            assert_eq!(g.degree(leaf), 1);
        }
    }

    #[test]
    fn disconnected_rejected() {
        let err = DiscreteGraph::new(3, &[(0, 1)]).unwrap_err();
        assert!(err.to_string().contains("disconnected"));
        assert!(err.to_string().contains("2"));
    }

    #[test]
    fn duplicate_and_self_loop_rejected() {
        assert!(DiscreteGraph::new(2, &[(0, 1), (1, 0)]).is_err());
        assert!(DiscreteGraph::new(2, &[(0, 0)]).is_err());
        assert!(DiscreteGraph::new(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn neighborhood_with_exclusion() {
        let g = star(3);
        assert_eq!(g.neighborhood(0, None).unwrap(), vec![1, 2, 3]);
        assert_eq!(g.neighborhood(0, Some(2)).unwrap(), vec![1, 3]);
        assert_eq!(g.neighborhood(1, None).unwrap(), vec![0]);
        assert!(g.neighborhood(9, None).is_err());
    }

    #[test]
    fn bond_ordering_single_edge() {
        let g = DiscreteGraph::new(2, &[(0, 1)]).unwrap();
        let basis = BondBasis::new(&g);
        assert_eq!(basis.len(), 2);
        assert_eq!(basis.bond(0), Bond { tail: 0, head: 1, edge: 0 });
        assert_eq!(basis.bond(1), Bond { tail: 1, head: 0, edge: 0 });
    }

    #[test]
    fn bond_ordering_star_and_triangle() {
        let s3 = DiscreteGraph::new(3, &[(0, 1), (0, 2)]).unwrap();
        let basis = BondBasis::new(&s3);
        let seq: Vec<(usize, usize)> = basis.bonds().iter().map(|b| (b.tail, b.head)).collect();
        assert_eq!(seq, vec![(0, 1), (1, 0), (0, 2), (2, 0)]);

        let tri = DiscreteGraph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let basis = BondBasis::new(&tri);
        assert_eq!(basis.len(), 6);
        let seq: Vec<(usize, usize)> = basis.bonds().iter().map(|b| (b.tail, b.head)).collect();
        assert_eq!(seq, vec![(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]);
    }

    #[test]
    fn metric_graph_validation() {
        let g = DiscreteGraph::new(2, &[(0, 1)]).unwrap();
        assert!(MetricGraph::closed(g.clone(), vec![1.0]).is_ok());
        assert!(MetricGraph::closed(g.clone(), vec![0.0]).is_err());
        assert!(MetricGraph::closed(g.clone(), vec![-1.0]).is_err());
        assert!(MetricGraph::closed(g.clone(), vec![]).is_err());
        let leads = Some(Leads { entrance: 0, exit: 0 });
        assert!(MetricGraph::new(g, vec![1.0], leads).is_err());
    }

    /// Random connected graph: a random tree plus a few extra edges.
    fn arb_graph() -> impl Strategy<Value = DiscreteGraph> {
        (2usize..8, any::<u64>()).prop_map(|(n, seed)| {
            let mut state = seed | 1;
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state
            };
            let mut edges = Vec::new();
            for v in 1..n {
                let parent = (next() as usize) % v;
                edges.push((parent.min(v), parent.max(v)));
            }
            for _ in 0..(next() as usize % n) {
                let a = (next() as usize) % n;
                let b = (next() as usize) % n;
                if a != b {
                    let e = (a.min(b), a.max(b));
                    if !edges.contains(&e) {
                        edges.push(e);
                    }
                }
            }
            DiscreteGraph::new(n, &edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn degree_sum_is_twice_edge_count(g in arb_graph()) {
            let total: usize = (0..g.vertex_count()).map(|v| g.degree(v)).sum();
            prop_assert_eq!(total, 2 * g.edge_count());
        }

        #[test]
        fn reverse_is_involution(g in arb_graph()) {
            let basis = BondBasis::new(&g);
            for b in 0..basis.len() {
                let r = basis.reverse(b);
                prop_assert_eq!(basis.reverse(r), b);
                let (fwd, back) = (basis.bond(b), basis.bond(r));
                prop_assert_eq!(fwd.tail, back.head);
                prop_assert_eq!(fwd.head, back.tail);
                prop_assert_eq!(fwd.edge, back.edge);
            }
        }

        #[test]
        fn neighborhood_matches_adjacency(g in arb_graph()) {
            for i in 0..g.vertex_count() {
                let nb = g.neighborhood(i, None).unwrap();
                for j in 0..g.vertex_count() {
                    prop_assert_eq!(nb.contains(&j), g.adjacent(i, j));
                }
            }
        }
    }
}
