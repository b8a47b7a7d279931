//! Conflict graphs, multi-channel networks and the classical graph quantities
//! that govern asymptotic throughput: independence number, chromatic number
//! and the number of pairwise-disjoint maximum independent sets.
//!
//! Graphs are stored with canonical edges (`i < j`, sorted, no duplicates)
//! and one `u64` neighbourhood mask per node, which caps graphs at
//! [`MAX_NODES`] nodes.

mod exact;
mod network;

pub use exact::{
    chromatic_number, chromatic_number_with_cap, disjoint_mis_count, disjoint_mis_count_with_cap,
    independence_number, independence_number_with_cap, maximum_independent_sets,
    DEFAULT_NODE_CAP,
};
pub use network::{parse_network, read_network_file, MultiChannelNetwork, NetworkFile, RateModel};

use crate::error::{Error, Result};

/// Hard limit imposed by the `u64` neighbourhood masks.
pub const MAX_NODES: usize = 64;

/// Undirected simple graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<u64>,
}

impl ConflictGraph {
    /// Validates and canonicalizes an edge list.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::schema("a conflict graph needs at least one node"));
        }
        if n > MAX_NODES {
            return Err(Error::CapExceeded {
                what: "conflict graph nodes",
                cap: MAX_NODES as u128,
                bound: n as u128,
            });
        }
        let mut canon = Vec::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::schema(format!(
                    "edge ({i},{j}) references a node outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::schema(format!("self-loop on node {i}")));
            }
            canon.push((i.min(j), i.max(j)));
        }
        canon.sort_unstable();
        canon.dedup();
        let mut adj = vec![0u64; n];
        for &(i, j) in &canon {
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
        Ok(Self {
            n,
            edges: canon,
            adj,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// Canonical edge list.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbourhood bitmask of `node`.
    pub fn neighbors(&self, node: usize) -> u64 {
        self.adj[node]
    }

    pub fn adjacency(&self) -> &[u64] {
        &self.adj
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.adj[i] >> j & 1 == 1
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adj[node].count_ones() as usize
    }

    pub fn is_independent(&self, set: u64) -> bool {
        (0..self.n)
            .filter(|&i| set >> i & 1 == 1)
            .all(|i| self.adj[i] & set == 0)
    }

    /// Mask with the lowest `n` bits set.
    pub fn all_nodes(&self) -> u64 {
        full_mask(self.n)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid("a cycle needs at least three nodes"));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Result<Self> {
        Self::new(leaves + 1, (1..=leaves).map(|l| (0, l)))
    }

    /// `rows x cols` grid, nodes numbered row-major.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let id = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                }
            }
        }
        Self::new(rows * cols, edges)
    }

    /// Outer 5-cycle 0..5, inner pentagram 5..10, spokes i -- i+5.
    pub fn petersen() -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
            edges.push((i, i + 5));
        }
        Self::new(10, edges)
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_are_canonical() {
        let g = ConflictGraph::new(3, [(2, 0), (0, 2), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
        assert!(g.has_edge(2, 0));
        assert!(!g.has_edge(1, 2));
    }

    #[test]
    fn rejects_self_loop_and_out_of_range() {
        assert!(matches!(
            ConflictGraph::new(2, [(0, 0)]),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            ConflictGraph::new(2, [(0, 2)]),
            Err(Error::Schema(_))
        ));
        assert!(ConflictGraph::new(0, []).is_err());
    }

    #[test]
    fn named_graphs() {
        assert_eq!(ConflictGraph::petersen().unwrap().edges().len(), 15);
        assert_eq!(ConflictGraph::grid(2, 3).unwrap().edges().len(), 7);
        assert_eq!(ConflictGraph::star(3).unwrap().degree(0), 3);
        assert_eq!(ConflictGraph::complete(4).unwrap().edges().len(), 6);
        assert!((0..10).all(|i| ConflictGraph::petersen().unwrap().degree(i) == 3));
    }

    #[test]
    fn bit_iteration() {
        assert_eq!(bits(0b1010_0001).collect::<Vec<_>>(), vec![0, 5, 7]);
        assert_eq!(full_mask(64), u64::MAX);
    }
}
