//! Enumeration of the feasible multi-channel activity states, their
//! single-step transitions and the uniformized discrete-time chain.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conflict_graph::{MultiChannelNetwork, RateModel};
use crate::error::{Error, Result};

/// Default refusal threshold for enumeration.
pub const DEFAULT_STATE_CAP: usize = 5_000_000;

/// Channel occupied by each node, 0 meaning inactive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityState(Vec<u8>);

impl ActivityState {
    pub fn new(values: Vec<u8>) -> Self {
        Self(values)
    }

    pub fn inactive(num_nodes: usize) -> Self {
        Self(vec![0; num_nodes])
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn activity(&self) -> usize {
        activity(&self.0)
    }

    /// Checks the per-channel conflict constraints of `net`.
    pub fn check_feasible(&self, net: &MultiChannelNetwork) -> Result<()> {
        if self.0.len() != net.num_nodes() {
            return Err(Error::InfeasibleState(format!(
                "state has {} entries, network has {} nodes",
                self.0.len(),
                net.num_nodes()
            )));
        }
        for (i, &c) in self.0.iter().enumerate() {
            if c as usize > net.num_channels() {
                return Err(Error::InfeasibleState(format!(
                    "node {i} uses channel {c} but only {} exist",
                    net.num_channels()
                )));
            }
        }
        for c in 1..=net.num_channels() {
            for &(i, j) in net.channel_graph(c).edges() {
                if self.0[i] as usize == c && self.0[j] as usize == c {
                    return Err(Error::InfeasibleState(format!(
                        "conflicting nodes {i} and {j} are both active on channel {c}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl From<Vec<u8>> for ActivityState {
    fn from(v: Vec<u8>) -> Self {
        Self(v)
    }
}

impl fmt::Display for ActivityState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Accepts one digit per node (`"1020"`) or comma-separated channels
/// (`"1,0,2,0"`) when more than nine channels are in use.
impl std::str::FromStr for ActivityState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InfeasibleState(format!("cannot parse state '{s}'"));
        let values: Vec<u8> = if s.contains(',') {
            s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
        } else {
            s.chars()
                .map(|ch| ch.to_digit(10).map(|d| d as u8).ok_or_else(bad))
                .collect::<Result<_>>()?
        };
        if values.is_empty() {
            return Err(bad());
        }
        Ok(Self(values))
    }
}

/// Number of active nodes.
pub fn activity(values: &[u8]) -> usize {
    values.iter().filter(|&&v| v != 0).count()
}

/// Minimum number of single-node moves between two states: a node changing
/// channel has to deactivate first, so it costs two steps.
pub fn state_distance(x: &[u8], y: &[u8]) -> usize {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| match (a == b, a != 0 && b != 0) {
            (true, _) => 0,
            (false, true) => 2,
            (false, false) => 1,
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub target: u32,
    pub node: u8,
    /// Channel being activated or released (1-based).
    pub channel: u8,
    pub activate: bool,
}

#[derive(Clone, Debug)]
pub struct StateSpace {
    num_nodes: usize,
    num_channels: usize,
    states: Vec<u8>,
    offsets: Vec<usize>,
    transitions: Vec<Transition>,
    activity: Vec<u8>,
    level: Vec<f64>,
    max_activity: usize,
    max_level: f64,
    dominant: Vec<usize>,
    rates: RateModel,
}

impl StateSpace {
    pub fn enumerate(net: &MultiChannelNetwork) -> Result<Self> {
        Self::enumerate_with_cap(net, DEFAULT_STATE_CAP)
    }

    pub fn enumerate_with_cap(net: &MultiChannelNetwork, cap: usize) -> Result<Self> {
        let n = net.num_nodes();
        let c = net.num_channels();
        let bound = (c as u128 + 1).checked_pow(n as u32).unwrap_or(u128::MAX);
        let masks: Vec<Vec<u64>> = (1..=c)
            .map(|ch| net.channel_graph(ch).adjacency().to_vec())
            .collect();

        let mut states = Vec::new();
        let mut current = vec![0u8; n];
        let mut on = vec![0u64; c + 1];
        let mut count = 0usize;
        extend(&masks, 0, &mut current, &mut on, &mut states, &mut count, cap).map_err(|()| {
            Error::CapExceeded {
                what: "state space",
                cap: cap as u128,
                bound,
            }
        })?;

        let rates = net.rates().clone();
        let len = count;
        let row = |k: usize| &states[k * n..(k + 1) * n];
        let keys = PackedKeys::new(n, c, &states, len);
        let per_state: Vec<Vec<Transition>> = (0..len)
            .into_par_iter()
            .map(|k| {
                let x = row(k);
                let mut busy = vec![0u64; c + 1];
                for (j, &v) in x.iter().enumerate() {
                    busy[v as usize] |= 1 << j;
                }
                let mut out = Vec::new();
                let mut y = x.to_vec();
                let find = |y: &[u8], i: usize, old: u8, new: u8| -> u32 {
                    let found = match &keys {
                        Some(pk) => pk.shifted(k, i, old, new),
                        None => search(&states, n, len, y),
                    };
                    found.expect("state space is closed") as u32
                };
                for i in 0..n {
                    if x[i] != 0 {
                        y[i] = 0;
                        out.push(Transition {
                            target: find(&y, i, x[i], 0),
                            node: i as u8,
                            channel: x[i],
                            activate: false,
                        });
                        y[i] = x[i];
                        continue;
                    }
                    for ch in 1..=c {
                        if masks[ch - 1][i] & busy[ch] != 0 {
                            continue;
                        }
                        y[i] = ch as u8;
                        out.push(Transition {
                            target: find(&y, i, 0, ch as u8),
                            node: i as u8,
                            channel: ch as u8,
                            activate: true,
                        });
                    }
                    y[i] = 0;
                }
                out
            })
            .collect();

        let mut offsets = Vec::with_capacity(len + 1);
        offsets.push(0);
        let mut transitions = Vec::new();
        for t in per_state {
            transitions.extend(t);
            offsets.push(transitions.len());
        }

        let activity: Vec<u8> = (0..len).map(|k| self::activity(row(k)) as u8).collect();
        let level: Vec<f64> = (0..len)
            .map(|k| match &rates {
                RateModel::Homogeneous { .. } => activity[k] as f64,
                RateModel::HeterogeneousExponents { .. } => row(k)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(i, &v)| rates.exponent(i, v as usize))
                    .sum(),
            })
            .collect();
        let max_activity = activity.iter().copied().max().unwrap_or(0) as usize;
        let max_level = level.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = level_tolerance(max_level);
        let dominant = (0..len).filter(|&k| level[k] >= max_level - tol).collect();

        Ok(Self {
            num_nodes: n,
            num_channels: c,
            states,
            offsets,
            transitions,
            activity,
            level,
            max_activity,
            max_level,
            dominant,
            rates,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn len(&self) -> usize {
        self.activity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activity.is_empty()
    }

    pub fn rates(&self) -> &RateModel {
        &self.rates
    }

    pub fn is_homogeneous(&self) -> bool {
        self.rates.is_homogeneous()
    }

    /// Values of state `k`.
    pub fn state(&self, k: usize) -> &[u8] {
        &self.states[k * self.num_nodes..(k + 1) * self.num_nodes]
    }

    pub fn activity_state(&self, k: usize) -> ActivityState {
        ActivityState(self.state(k).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.states.chunks_exact(self.num_nodes)
    }

    pub fn index_of(&self, values: &[u8]) -> Option<usize> {
        if values.len() != self.num_nodes {
            return None;
        }
        search(&self.states, self.num_nodes, self.len(), values)
    }

    /// Index of `x`, or an infeasibility error.
    pub fn require(&self, x: &ActivityState) -> Result<usize> {
        self.index_of(x.values())
            .ok_or_else(|| Error::InfeasibleState(format!("{x} is not a feasible state")))
    }

    pub fn transitions(&self, k: usize) -> &[Transition] {
        &self.transitions[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    /// Number of active nodes a(x) of state `k`.
    pub fn activity(&self, k: usize) -> usize {
        self.activity[k] as usize
    }

    /// Landscape height of state `k`: a(x), or the weighted activity under
    /// heterogeneous exponents.
    pub fn level(&self, k: usize) -> f64 {
        self.level[k]
    }

    pub fn levels(&self) -> &[f64] {
        &self.level
    }

    /// A(C): maximum number of simultaneously active nodes.
    pub fn max_activity(&self) -> usize {
        self.max_activity
    }

    /// Maximum landscape height (A(C) in the homogeneous model).
    pub fn max_level(&self) -> f64 {
        self.max_level
    }

    /// Indices of the dominant states, ascending.
    pub fn dominant(&self) -> &[usize] {
        &self.dominant
    }

    pub fn dominant_states(&self) -> Vec<ActivityState> {
        self.dominant.iter().map(|&k| self.activity_state(k)).collect()
    }

    pub fn is_dominant(&self, k: usize) -> bool {
        self.dominant.binary_search(&k).is_ok()
    }

    /// Transition rate for the given move at activation scale `nu`.
    pub fn rate(&self, t: &Transition, nu: f64) -> f64 {
        if t.activate {
            self.rates.activation_rate(t.node as usize, t.channel as usize, nu)
        } else {
            1.0
        }
    }

    pub fn exit_rate(&self, k: usize, nu: f64) -> f64 {
        self.transitions(k).iter().map(|t| self.rate(t, nu)).sum()
    }

    /// Largest total exit rate over all states. For homogeneous rates with
    /// `C * nu >= 1` this is `C * N * nu`, attained by the empty state.
    pub fn uniformization_rate(&self, nu: f64) -> f64 {
        (0..self.len())
            .map(|k| self.exit_rate(k, nu))
            .fold(0.0, f64::max)
    }

    /// Discrete-time chain obtained by uniformizing at the maximal exit rate.
    pub fn uniformized_matrix(&self, nu: f64) -> Result<UniformizedChain> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::invalid(format!("nu must be positive, got {nu}")));
        }
        let q_max = self.uniformization_rate(nu);
        let prob: Vec<f64> = (0..self.len())
            .flat_map(|k| self.transitions(k).iter().map(move |t| (k, t)))
            .map(|(_, t)| self.rate(t, nu) / q_max)
            .collect();
        let exit: Vec<f64> = (0..self.len())
            .map(|k| prob[self.offsets[k]..self.offsets[k + 1]].iter().sum())
            .collect();
        Ok(UniformizedChain {
            q_max,
            offsets: self.offsets.clone(),
            targets: self.transitions.iter().map(|t| t.target as usize).collect(),
            prob,
            exit,
        })
    }
}

/// Tolerance used when comparing weighted activity levels.
pub(crate) fn level_tolerance(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

fn extend(
    masks: &[Vec<u64>],
    i: usize,
    current: &mut [u8],
    on: &mut [u64],
    out: &mut Vec<u8>,
    count: &mut usize,
    cap: usize,
) -> std::result::Result<(), ()> {
    let n = current.len();
    if i == n {
        *count += 1;
        if *count > cap {
            return Err(());
        }
        out.extend_from_slice(current);
        return Ok(());
    }
    current[i] = 0;
    extend(masks, i + 1, current, on, out, count, cap)?;
    for ch in 1..=masks.len() {
        if masks[ch - 1][i] & on[ch] == 0 {
            current[i] = ch as u8;
            on[ch] |= 1 << i;
            extend(masks, i + 1, current, on, out, count, cap)?;
            on[ch] &= !(1 << i);
        }
    }
    current[i] = 0;
    Ok(())
}

/// States as base `C + 1` integers, node 0 most significant. Lexicographic
/// order of the byte rows equals numeric order of the keys, so neighbours
/// are found by binary search on integers. `None` when keys overflow.
struct PackedKeys {
    keys: Vec<u64>,
    place: Vec<u64>,
}

impl PackedKeys {
    fn new(n: usize, c: usize, states: &[u8], len: usize) -> Option<Self> {
        let radix = c as u64 + 1;
        radix.checked_pow(n as u32)?;
        let mut place = vec![1u64; n];
        for i in (0..n.saturating_sub(1)).rev() {
            place[i] = place[i + 1] * radix;
        }
        let keys = (0..len)
            .map(|k| {
                states[k * n..(k + 1) * n]
                    .iter()
                    .zip(&place)
                    .map(|(&v, &p)| v as u64 * p)
                    .sum()
            })
            .collect();
        Some(Self { keys, place })
    }

    /// Index of state `k` with node `i` changed from `old` to `new`.
    fn shifted(&self, k: usize, i: usize, old: u8, new: u8) -> Option<usize> {
        let key = self.keys[k] - old as u64 * self.place[i] + new as u64 * self.place[i];
        self.keys.binary_search(&key).ok()
    }
}

fn search(states: &[u8], n: usize, len: usize, key: &[u8]) -> Option<usize> {
    let (mut lo, mut hi) = (0, len);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match states[mid * n..(mid + 1) * n].cmp(key) {
            Ordering::Less => lo = mid + 1,
            Ordering::Greater => hi = mid,
            Ordering::Equal => return Some(mid),
        }
    }
    None
}

/// Row-stochastic uniformized transition matrix in sparse form. Off-diagonal
/// entries are stored along the transition lists of the state space; the
/// self-loop absorbs the remainder of each row.
#[derive(Clone, Debug)]
pub struct UniformizedChain {
    pub q_max: f64,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    prob: Vec<f64>,
    exit: Vec<f64>,
}

impl UniformizedChain {
    pub fn len(&self) -> usize {
        self.exit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exit.is_empty()
    }

    /// Off-diagonal entries `(target, P(k, target))` of row `k`.
    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[k]..self.offsets[k + 1];
        self.targets[r.clone()].iter().copied().zip(self.prob[r].iter().copied())
    }

    /// Probability of leaving state `k` in one step.
    pub fn exit_probability(&self, k: usize) -> f64 {
        self.exit[k]
    }

    pub fn self_loop(&self, k: usize) -> f64 {
        1.0 - self.exit[k]
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for (k, row) in m.iter_mut().enumerate() {
            for (j, p) in self.row(k) {
                row[j] += p;
            }
            row[k] += self.self_loop(k);
        }
        m
    }
}
