//! Exact branch-and-bound searches over bitmask graphs.

use super::{bits, ConflictGraph};
use crate::error::{Error, Result};

/// Default node cap for the exact graph searches.
pub const DEFAULT_NODE_CAP: usize = 32;

fn check_cap(g: &ConflictGraph, cap: usize) -> Result<()> {
    if g.num_nodes() > cap {
        return Err(Error::CapExceeded {
            what: "conflict graph nodes",
            cap: cap as u128,
            bound: g.num_nodes() as u128,
        });
    }
    Ok(())
}

pub fn independence_number(g: &ConflictGraph) -> Result<usize> {
    independence_number_with_cap(g, DEFAULT_NODE_CAP)
}

/// Cardinality of a maximum independent set.
pub fn independence_number_with_cap(g: &ConflictGraph, cap: usize) -> Result<usize> {
    check_cap(g, cap)?;
    let mut best = 0;
    max_is(g.adjacency(), g.all_nodes(), 0, &mut best);
    Ok(best)
}

fn max_is(adj: &[u64], cand: u64, size: usize, best: &mut usize) {
    if cand == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + cand.count_ones() as usize <= *best {
        return;
    }
    // A vertex of degree <= 1 inside `cand` belongs to some maximum set.
    let mut pivot = None;
    let mut pivot_deg = 0;
    for v in bits(cand) {
        let d = (adj[v] & cand).count_ones();
        if d <= 1 {
            max_is(adj, cand & !(adj[v] | 1 << v), size + 1, best);
            return;
        }
        if pivot.is_none() || d > pivot_deg {
            pivot = Some(v);
            pivot_deg = d;
        }
    }
    let v = pivot.expect("cand is non-empty");
    max_is(adj, cand & !(adj[v] | 1 << v), size + 1, best);
    max_is(adj, cand & !(1 << v), size, best);
}

/// All maximum independent sets as bitmasks, in increasing numeric order.
pub fn maximum_independent_sets(g: &ConflictGraph, cap: usize) -> Result<Vec<u64>> {
    let alpha = independence_number_with_cap(g, cap)?;
    let mut out = Vec::new();
    collect_is(g.adjacency(), g.all_nodes(), 0, alpha, &mut out);
    out.sort_unstable();
    Ok(out)
}

fn collect_is(adj: &[u64], cand: u64, chosen: u64, target: usize, out: &mut Vec<u64>) {
    let size = chosen.count_ones() as usize;
    if size == target {
        out.push(chosen);
        return;
    }
    if size + (cand.count_ones() as usize) < target {
        return;
    }
    let v = cand.trailing_zeros() as usize;
    collect_is(adj, cand & !(adj[v] | 1 << v), chosen | 1 << v, target, out);
    collect_is(adj, cand & !(1 << v), chosen, target, out);
}

pub fn chromatic_number(g: &ConflictGraph) -> Result<usize> {
    chromatic_number_with_cap(g, DEFAULT_NODE_CAP)
}

/// Smallest number of colours in a proper vertex colouring.
pub fn chromatic_number_with_cap(g: &ConflictGraph, cap: usize) -> Result<usize> {
    check_cap(g, cap)?;
    let n = g.num_nodes();
    if g.edges().is_empty() {
        return Ok(1);
    }
    // Colour high-degree vertices first so conflicts surface early.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
    let alpha = independence_number_with_cap(g, cap)?;
    let lower = n.div_ceil(alpha).max(2);
    let upper = greedy_colours(g, &order);
    for k in lower..upper {
        let mut colour = vec![usize::MAX; n];
        if colourable(g, &order, 0, k, 0, &mut colour) {
            return Ok(k);
        }
    }
    Ok(upper)
}

fn greedy_colours(g: &ConflictGraph, order: &[usize]) -> usize {
    let mut colour = vec![usize::MAX; g.num_nodes()];
    let mut used = 0;
    for &v in order {
        let taken: Vec<usize> = bits(g.neighbors(v)).map(|u| colour[u]).collect();
        let c = (0..).find(|c| !taken.contains(c)).unwrap();
        colour[v] = c;
        used = used.max(c + 1);
    }
    used
}

fn colourable(
    g: &ConflictGraph,
    order: &[usize],
    pos: usize,
    k: usize,
    used: usize,
    colour: &mut [usize],
) -> bool {
    if pos == order.len() {
        return true;
    }
    let v = order[pos];
    // New colours are interchangeable, so only the first unused one is tried.
    for c in 0..k.min(used + 1) {
        if bits(g.neighbors(v)).all(|u| colour[u] != c) {
            colour[v] = c;
            if colourable(g, order, pos + 1, k, used.max(c + 1), colour) {
                return true;
            }
            colour[v] = usize::MAX;
        }
    }
    false
}

pub fn disjoint_mis_count(g: &ConflictGraph) -> Result<usize> {
    disjoint_mis_count_with_cap(g, DEFAULT_NODE_CAP)
}

/// Maximum number of pairwise-disjoint maximum independent sets.
pub fn disjoint_mis_count_with_cap(g: &ConflictGraph, cap: usize) -> Result<usize> {
    let sets = maximum_independent_sets(g, cap)?;
    let alpha = sets[0].count_ones() as usize;
    let limit = g.num_nodes() / alpha;
    let mut best = 1;
    pack(&sets, 0, 0, 0, limit, &mut best);
    Ok(best)
}

fn pack(sets: &[u64], from: usize, used: u64, count: usize, limit: usize, best: &mut usize) {
    if count > *best {
        *best = count;
    }
    if *best == limit {
        return;
    }
    for (k, &s) in sets.iter().enumerate().skip(from) {
        if s & used != 0 {
            continue;
        }
        let remaining = sets[k..].iter().filter(|&&t| t & (used | s) == 0).count();
        if count + 1 + remaining <= *best {
            continue;
        }
        pack(sets, k + 1, used | s, count + 1, limit, best);
        if *best == limit {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Oracles: plain enumeration over all subsets / all colourings.
    fn naive_alpha(g: &ConflictGraph) -> usize {
        (0..1u64 << g.num_nodes())
            .filter(|&s| g.is_independent(s))
            .map(|s| s.count_ones() as usize)
            .max()
            .unwrap()
    }

    fn naive_chi(g: &ConflictGraph) -> usize {
        let n = g.num_nodes();
        (1..=n)
            .find(|&k| {
                let total = k.pow(n as u32);
                (0..total).any(|code| {
                    let mut c = vec![0; n];
                    let mut x = code;
                    for slot in c.iter_mut() {
                        *slot = x % k;
                        x /= k;
                    }
                    g.edges().iter().all(|&(i, j)| c[i] != c[j])
                })
            })
            .unwrap()
    }

    fn naive_cstar(g: &ConflictGraph) -> usize {
        let alpha = naive_alpha(g);
        let sets: Vec<u64> = (0..1u64 << g.num_nodes())
            .filter(|&s| g.is_independent(s) && s.count_ones() as usize == alpha)
            .collect();
        fn best(sets: &[u64], used: u64) -> usize {
            sets.iter()
                .enumerate()
                .filter(|(_, &s)| s & used == 0)
                .map(|(k, &s)| 1 + best(&sets[k + 1..], used | s))
                .max()
                .unwrap_or(0)
        }
        best(&sets, 0)
    }

    #[test]
    fn independence_examples() {
        assert_eq!(independence_number(&ConflictGraph::complete(2).unwrap()).unwrap(), 1);
        let c4 = ConflictGraph::cycle(4).unwrap();
        // 7 independent sets: {}, four singletons, {0,2}, {1,3}
        assert_eq!((0..16u64).filter(|&s| c4.is_independent(s)).count(), 7);
        assert_eq!(independence_number(&c4).unwrap(), 2);
        assert_eq!(independence_number(&ConflictGraph::star(3).unwrap()).unwrap(), 3);
        assert_eq!(independence_number(&ConflictGraph::petersen().unwrap()).unwrap(), 4);
    }

    #[test]
    fn chromatic_examples() {
        assert_eq!(chromatic_number(&ConflictGraph::empty(5).unwrap()).unwrap(), 1);
        assert_eq!(chromatic_number(&ConflictGraph::cycle(4).unwrap()).unwrap(), 2);
        assert_eq!(chromatic_number(&ConflictGraph::complete(3).unwrap()).unwrap(), 3);
        assert_eq!(chromatic_number(&ConflictGraph::cycle(5).unwrap()).unwrap(), 3);
        assert_eq!(chromatic_number(&ConflictGraph::petersen().unwrap()).unwrap(), 3);
    }

    #[test]
    fn disjoint_mis_examples() {
        assert_eq!(disjoint_mis_count(&ConflictGraph::cycle(4).unwrap()).unwrap(), 2);
        assert_eq!(disjoint_mis_count(&ConflictGraph::complete(3).unwrap()).unwrap(), 3);
        assert_eq!(disjoint_mis_count(&ConflictGraph::path(3).unwrap()).unwrap(), 1);
        let sets = maximum_independent_sets(&ConflictGraph::cycle(4).unwrap(), 32).unwrap();
        assert_eq!(sets, vec![0b0101, 0b1010]);
    }

    #[test]
    fn node_cap_enforced() {
        let g = ConflictGraph::path(40).unwrap();
        assert!(matches!(
            independence_number(&g),
            Err(Error::CapExceeded { bound: 40, .. })
        ));
        assert_eq!(independence_number_with_cap(&g, 40).unwrap(), 20);
    }

    fn arb_graph() -> impl Strategy<Value = ConflictGraph> {
        (1usize..=7).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let m = pairs.len();
            proptest::collection::vec(any::<bool>(), m).prop_map(move |keep| {
                let edges = pairs.iter().zip(&keep).filter(|(_, &k)| k).map(|(&e, _)| e);
                ConflictGraph::new(n, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn matches_enumeration_oracle(g in arb_graph()) {
            let n = g.num_nodes();
            let alpha = independence_number(&g).unwrap();
            let chi = chromatic_number(&g).unwrap();
            let cstar = disjoint_mis_count(&g).unwrap();
            prop_assert_eq!(alpha, naive_alpha(&g));
            prop_assert_eq!(chi, naive_chi(&g));
            prop_assert_eq!(cstar, naive_cstar(&g));
            prop_assert!(alpha >= 1 && chi >= 1 && cstar >= 1);
            prop_assert!(chi <= n);
            prop_assert!(alpha * chi >= n);
            prop_assert!(cstar * alpha <= n);
        }
    }
}
