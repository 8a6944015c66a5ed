//! Graph ensembles and the Markov transition models built from them.
//!
//! Graphs are simple and undirected: no self-loops, no multi-edges. Edges are
//! stored once as `(u, v)` with `u < v`, sorted. Random walks live on a
//! [`TransitionModel`], which is built either from a (possibly weighted)
//! graph or from bigram counts.

mod generate;
pub mod io;
mod transition;
mod weights;

pub use generate::{barabasi_albert_edge_count, gen_barabasi_albert, gen_erdos_renyi};
pub use transition::{build_bigram_model, build_transition_model, BigramCounts, TransitionModel};
pub use weights::{assign_weights, TruncatedPowerLaw, WeightedGraph};

use crate::error::{Error, Result};

/// A simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(u32, u32)>,
}

impl Graph {
    /// Build a graph from an edge list. Endpoint order is irrelevant; self
    /// loops, repeated edges and out-of-range endpoints are rejected.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        if n_nodes > u32::MAX as usize {
            return Err(Error::invalid(format!(
                "{n_nodes} nodes exceed the u32 id space"
            )));
        }
        let mut canon: Vec<(u32, u32)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::invalid(format!("self-loop at node {a}")));
            }
            if a as usize >= n_nodes || b as usize >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) has an endpoint outside 0..{n_nodes}"
                )));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!(
                "repeated edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Graph {
            n_nodes,
            edges: canon,
        })
    }

    /// Trusted constructor for generators that already emit canonical edges.
    pub(crate) fn from_canonical(n_nodes: usize, mut edges: Vec<(u32, u32)>) -> Self {
        edges.sort_unstable();
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(u, v)| u < v && (v as usize) < n_nodes));
        Graph { n_nodes, edges }
    }

    pub fn complete(n_nodes: usize) -> Self {
        let n = n_nodes as u32;
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Graph::from_canonical(n_nodes, edges)
    }

    /// Cycle on `n_nodes >= 3` nodes.
    pub fn cycle(n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::invalid("a simple cycle needs at least 3 nodes"));
        }
        let n = n_nodes as u32;
        Graph::new(n_nodes, (0..n).map(|u| (u, (u + 1) % n)))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n_nodes];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    /// Sorted neighbour lists in CSR form: `(offsets, neighbours)`.
    pub fn adjacency(&self) -> (Vec<usize>, Vec<u32>) {
        let deg = self.degrees();
        let mut offsets = Vec::with_capacity(self.n_nodes + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + *d as usize);
        }
        let mut fill = offsets.clone();
        let mut nbrs = vec![0u32; 2 * self.edges.len()];
        for &(u, v) in &self.edges {
            nbrs[fill[u as usize]] = v;
            fill[u as usize] += 1;
            nbrs[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for u in 0..self.n_nodes {
            nbrs[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        (offsets, nbrs)
    }

    /// Connected-component label per node (labels are 0-based, in order of
    /// the smallest node in each component).
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n_nodes);
        for &(u, v) in &self.edges {
            uf.union(u as usize, v as usize);
        }
        uf.labels()
    }

    pub fn is_connected(&self) -> bool {
        self.n_nodes == 0 || self.components().iter().all(|&c| c == 0)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }

    pub(crate) fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut label_of_root = vec![usize::MAX; n];
        let mut next = 0;
        let mut out = vec![0; n];
        for (x, slot) in out.iter_mut().enumerate() {
            let r = self.find(x);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            *slot = label_of_root[r];
        }
        out
    }
}
