//! Searches small conflict graphs for instances with prescribed dominant-state
//! structure. Usage: `figure_search <fairness|heights|nested> <nodes> [stride offset]`.
//!
//! A bitmask prefilter counts dominant states for one and two channels
//! before the full state space is built.

use csma_core::analysis::{dominant_height_matrix, jain_index, starvation_indices};
use csma_core::{ConflictGraph, MultiChannelNetwork, RateModel, StateSpace};
use num_rational::Ratio;

fn space(g: &ConflictGraph, c: usize) -> StateSpace {
    StateSpace::enumerate(&MultiChannelNetwork::shared(g.clone(), c, RateModel::homogeneous(10.0)).unwrap()).unwrap()
}

fn matches_up_to_relabel(m: &[Vec<f64>], want: &[[f64; 4]; 4]) -> bool {
    if m.len() != 4 {
        return false;
    }
    let mut perm = [0usize, 1, 2, 3];
    loop {
        if (0..4).all(|i| (0..4).all(|j| m[perm[i]][perm[j]] == want[i][j])) {
            return true;
        }
        let Some(i) = (0..3).rev().find(|&i| perm[i] < perm[i + 1]) else {
            return false;
        };
        let j = (i + 1..4).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
}

struct Counts {
    best: Vec<u8>,
    cnt: Vec<u32>,
    indep: Vec<bool>,
}

impl Counts {
    fn new(n: usize) -> Self {
        Self {
            best: vec![0; 1 << n],
            cnt: vec![0; 1 << n],
            indep: vec![false; 1 << n],
        }
    }

    /// Returns (alpha, #MIS, A(2), #dominant 2-channel states).
    fn fill(&mut self, n: usize, adj: &[u64]) -> (u8, u32, u8, u32) {
        self.best[0] = 0;
        self.cnt[0] = 1;
        self.indep[0] = true;
        for m in 1usize..(1 << n) {
            let i = m.trailing_zeros() as usize;
            let rest = m & (m - 1);
            self.indep[m] = self.indep[rest] && adj[i] as usize & m == 0;
            let inc = rest & !(adj[i] as usize);
            let (b1, c1) = (self.best[rest], self.cnt[rest]);
            let (b2, c2) = (self.best[inc] + 1, self.cnt[inc]);
            (self.best[m], self.cnt[m]) = if b1 == b2 {
                (b1, c1 + c2)
            } else if b1 > b2 {
                (b1, c1)
            } else {
                (b2, c2)
            };
        }
        let full = (1usize << n) - 1;
        let (mut a2, mut d2) = (0u8, 0u32);
        for m in 0..=full {
            if self.indep[m] {
                let comp = full & !m;
                let total = m.count_ones() as u8 + self.best[comp];
                if total > a2 {
                    (a2, d2) = (total, self.cnt[comp]);
                } else if total == a2 {
                    d2 += self.cnt[comp];
                }
            }
        }
        (self.best[full], self.cnt[full], a2, d2)
    }
}

fn connected(n: usize, adj: &[u64]) -> bool {
    let mut seen = 1u64;
    loop {
        let mut next = seen;
        for i in 0..n {
            if seen >> i & 1 == 1 {
                next |= adj[i];
            }
        }
        if next == seen {
            return seen.count_ones() as usize == n;
        }
        seen = next;
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(String::as_str).unwrap_or("heights");
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(7);
    let stride: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);
    let offset: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0);
    let d1 = [[0., 2., 2., 2.], [2., 0., 1., 1.], [2., 1., 0., 1.], [2., 1., 1., 0.]];
    let d2 = [[0., 1., 3., 3.], [1., 0., 3., 3.], [3., 3., 0., 1.], [3., 3., 1., 0.]];
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut counts = Counts::new(n);
    let mut found = 0;
    let mut adj = vec![0u64; n];
    let mut mask = offset;
    while mask < (1u64 << pairs.len()) {
        adj.iter_mut().for_each(|a| *a = 0);
        let mut bits = mask;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (i, j) = pairs[b];
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
        mask += stride;
        let (_, mis, _, dom2) = counts.fill(n, &adj);
        let pre = match what {
            "fairness" => mis == 3 && dom2 == 2,
            "heights" => mis == 4 && dom2 == 4,
            _ => mis == 1 && dom2 == 2,
        };
        if !pre || !connected(n, &adj) {
            continue;
        }
        let edges: Vec<(usize, usize)> =
            pairs.iter().copied().filter(|&(i, j)| adj[i] >> j & 1 == 1).collect();
        let g = ConflictGraph::new(n, edges.clone()).unwrap();
        let s1 = space(&g, 1);
        let s2 = space(&g, 2);
        let ok = match what {
            "fairness" => {
                jain_index(&s1) == Some(Ratio::new(9, 13)) && jain_index(&s2) == Some(Ratio::new(2, 3))
            }
            "heights" => {
                let st = starvation_indices(&s2);
                let defined = st.per_node.iter().filter(|v| v.index().is_some()).count();
                matches_up_to_relabel(&dominant_height_matrix(&s1), &d1)
                    && matches_up_to_relabel(&dominant_height_matrix(&s2), &d2)
                    && st.network == Some(1.0)
                    && defined == 2
            }
            _ => {
                // a two-channel dominant state none of whose channels carries a one-channel dominant set
                let top: Vec<bool> = s1.state(s1.dominant()[0]).iter().map(|&v| v != 0).collect();
                s2.dominant()
                    .iter()
                    .any(|&k| (1..=2u8).all(|c| s2.state(k).iter().zip(&top).any(|(&v, &t)| t != (v == c))))
            }
        };
        if ok {
            found += 1;
            println!("n={n} edges={edges:?}");
            if found >= 5 {
                return;
            }
        }
    }
    println!("found {found}");
}
