//! Communication heights: the smallest possible worst activity deficit
//! `A(C) - a(z)` along a path between two sets of states.
//!
//! Computed by threshold search. States are switched on in decreasing order
//! of level and merged with already-present neighbours in a union-find; the
//! level at which the two sets first share a component gives the height.

use crate::error::{Error, Result};
use crate::state_space::{level_tolerance, StateSpace};

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
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

    /// Merges the sets of `a` and `b`; returns `(new_root, absorbed_root)`
    /// when they were distinct.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        Some((ra, rb))
    }
}

/// States grouped by equal level, highest level first.
fn level_groups(space: &StateSpace) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.sort_by(|&a, &b| space.level(b).total_cmp(&space.level(a)).then(a.cmp(&b)));
    let tol = level_tolerance(space.max_level());
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for k in order {
        let l = space.level(k);
        match groups.last_mut() {
            Some((top, members)) if *top - l <= tol => members.push(k),
            _ => groups.push((l, vec![k])),
        }
    }
    groups
}

fn check_set(space: &StateSpace, set: &[usize], name: &str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::invalid(format!("{name} must be non-empty")));
    }
    if let Some(&k) = set.iter().find(|&&k| k >= space.len()) {
        return Err(Error::invalid(format!("{name} contains unknown state index {k}")));
    }
    Ok(())
}

/// Communication height between two disjoint, non-empty sets of states.
pub fn communication_height(space: &StateSpace, a: &[usize], b: &[usize]) -> Result<f64> {
    check_set(space, a, "first set")?;
    check_set(space, b, "second set")?;
    let mut tag = vec![0u8; space.len()];
    for &k in a {
        tag[k] |= 1;
    }
    for &k in b {
        tag[k] |= 2;
    }
    if tag.contains(&3) {
        return Err(Error::invalid("the two state sets must be disjoint"));
    }

    let mut uf = UnionFind::new(space.len());
    let mut flags = tag.clone();
    let mut present = vec![false; space.len()];
    for (level, members) in level_groups(space) {
        for &k in &members {
            present[k] = true;
            for t in space.transitions(k) {
                let j = t.target as usize;
                if present[j] {
                    if let Some((root, gone)) = uf.union(k, j) {
                        flags[root] |= flags[gone];
                    }
                }
            }
        }
        if members.iter().any(|&k| {
            let r = uf.find(k);
            flags[r] == 3
        }) {
            return Ok(space.max_level() - level);
        }
    }
    unreachable!("the transition graph of a state space is connected")
}

/// Pairwise heights between the given states, with a zero diagonal.
pub fn height_matrix(space: &StateSpace, states: &[usize]) -> Vec<Vec<f64>> {
    let m = states.len();
    let mut out = vec![vec![0.0; m]; m];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); space.len()];
    for (pos, &k) in states.iter().enumerate() {
        members[k].push(pos);
    }
    let mut uf = UnionFind::new(space.len());
    let mut present = vec![false; space.len()];
    for (level, group) in level_groups(space) {
        let h = space.max_level() - level;
        for &k in &group {
            present[k] = true;
            for t in space.transitions(k) {
                let j = t.target as usize;
                if !present[j] {
                    continue;
                }
                let (ra, rb) = (uf.find(k), uf.find(j));
                if ra == rb {
                    continue;
                }
                for &p in &members[ra] {
                    for &q in &members[rb] {
                        out[p][q] = h;
                        out[q][p] = h;
                    }
                }
                let (root, gone) = uf.union(ra, rb).expect("distinct roots");
                let moved = std::mem::take(&mut members[gone]);
                members[root].extend(moved);
            }
        }
    }
    out
}

/// Heights between all pairs of dominant states, in dominant order.
pub fn dominant_height_matrix(space: &StateSpace) -> Vec<Vec<f64>> {
    height_matrix(space, space.dominant())
}

/// Minimax edge cost over paths from `sources` to `targets` (Kruskal order).
pub(crate) fn minimax_edge_path(
    space: &StateSpace,
    sources: &[usize],
    targets: &[usize],
    cost: impl Fn(usize, usize) -> f64,
) -> f64 {
    let mut edges = Vec::with_capacity(space.num_transitions() / 2);
    for k in 0..space.len() {
        for t in space.transitions(k) {
            let j = t.target as usize;
            if j > k {
                edges.push((cost(k, j), k, j));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut uf = UnionFind::new(space.len());
    let mut flags = vec![0u8; space.len()];
    for &k in sources {
        flags[k] |= 1;
    }
    for &k in targets {
        flags[k] |= 2;
    }
    for (c, k, j) in edges {
        if let Some((root, gone)) = uf.union(k, j) {
            flags[root] |= flags[gone];
            if flags[root] == 3 {
                return c;
            }
        }
    }
    f64::INFINITY
}
