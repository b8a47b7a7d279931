//! Single-channel representation of a multi-channel network.
//!
//! Each node `i` is split into `C` virtual nodes `(i, c)`, indexed as
//! `i * C + (c - 1)`. Two virtual nodes conflict when they belong to the same
//! physical node, or share a channel whose conflict graph links their nodes.
//! Independent sets of the virtual graph are exactly the feasible activity
//! states of the original network.

use serde::Serialize;

use crate::analysis::stationary_distribution;
use crate::conflict_graph::{ConflictGraph, MultiChannelNetwork, RateModel};
use crate::error::{Error, Result};
use crate::state_space::{ActivityState, StateSpace, DEFAULT_STATE_CAP};

#[derive(Clone, Debug)]
pub struct VirtualGraph {
    origin: MultiChannelNetwork,
    graph: ConflictGraph,
}

impl VirtualGraph {
    pub fn num_virtual_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn graph(&self) -> &ConflictGraph {
        &self.graph
    }

    pub fn origin(&self) -> &MultiChannelNetwork {
        &self.origin
    }

    /// Virtual index of node `i` on channel `c` (1-based).
    pub fn index(&self, node: usize, channel: usize) -> usize {
        node * self.origin.num_channels() + channel - 1
    }

    /// `(node, channel)` of a virtual index.
    pub fn split(&self, v: usize) -> (usize, usize) {
        let c = self.origin.num_channels();
        (v / c, v % c + 1)
    }

    /// Single-channel network on the virtual graph whose activation rates
    /// copy those of the corresponding (node, channel) pairs.
    pub fn single_channel_network(&self) -> Result<MultiChannelNetwork> {
        let rates = match self.origin.rates() {
            RateModel::Homogeneous { nu } => RateModel::homogeneous(*nu),
            r @ RateModel::HeterogeneousExponents { nu, .. } => RateModel::HeterogeneousExponents {
                nu: *nu,
                weights: (0..self.num_virtual_nodes())
                    .map(|v| {
                        let (i, c) = self.split(v);
                        vec![r.exponent(i, c)]
                    })
                    .collect(),
            },
        };
        MultiChannelNetwork::shared(self.graph.clone(), 1, rates)
    }

    pub fn to_multichannel(&self, v_state: &[u8]) -> Result<ActivityState> {
        if v_state.len() != self.num_virtual_nodes() {
            return Err(Error::InfeasibleState(format!(
                "virtual state has {} entries, expected {}",
                v_state.len(),
                self.num_virtual_nodes()
            )));
        }
        let mut on = 0u64;
        for (v, &b) in v_state.iter().enumerate() {
            match b {
                0 => {}
                1 => on |= 1 << v,
                _ => return Err(Error::InfeasibleState(format!("virtual entry {v} is {b}, not 0/1"))),
            }
        }
        if !self.graph.is_independent(on) {
            return Err(Error::InfeasibleState(
                "virtual state is not an independent set of the virtual graph".into(),
            ));
        }
        let mut x = vec![0u8; self.origin.num_nodes()];
        for (v, &b) in v_state.iter().enumerate() {
            if b == 1 {
                let (i, c) = self.split(v);
                x[i] = c as u8;
            }
        }
        Ok(ActivityState::new(x))
    }

    pub fn from_multichannel(&self, x: &ActivityState) -> Result<Vec<u8>> {
        x.check_feasible(&self.origin)?;
        let mut v = vec![0u8; self.num_virtual_nodes()];
        for (i, &c) in x.values().iter().enumerate() {
            if c != 0 {
                v[self.index(i, c as usize)] = 1;
            }
        }
        Ok(v)
    }
}

/// Edge-list form written by `analyze --emit-virtual`.
#[derive(Clone, Debug, Serialize)]
pub struct VirtualGraphFile {
    pub num_virtual_nodes: usize,
    pub num_nodes: usize,
    pub num_channels: usize,
    pub encoding: &'static str,
    pub edges: Vec<[usize; 2]>,
}

impl From<&VirtualGraph> for VirtualGraphFile {
    fn from(g: &VirtualGraph) -> Self {
        Self {
            num_virtual_nodes: g.num_virtual_nodes(),
            num_nodes: g.origin.num_nodes(),
            num_channels: g.origin.num_channels(),
            encoding: "node * num_channels + (channel - 1)",
            edges: g.graph.edges().iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

pub fn build_virtual(net: &MultiChannelNetwork) -> Result<VirtualGraph> {
    let (n, c) = (net.num_nodes(), net.num_channels());
    let idx = |i: usize, ch: usize| i * c + ch - 1;
    let mut edges = Vec::new();
    for i in 0..n {
        for a in 1..=c {
            for b in a + 1..=c {
                edges.push((idx(i, a), idx(i, b)));
            }
        }
    }
    for ch in 1..=c {
        for &(i, j) in net.channel_graph(ch).edges() {
            edges.push((idx(i, ch), idx(j, ch)));
        }
    }
    Ok(VirtualGraph {
        origin: net.clone(),
        graph: ConflictGraph::new(n * c, edges)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub passed: bool,
    pub virtual_states: usize,
    pub multichannel_states: usize,
    pub transitions_checked: usize,
    /// Largest relative gap between the pushed-forward and direct stationary laws.
    pub max_stationary_error: f64,
    pub counterexample: Option<String>,
}

pub fn check_equivalence(net: &MultiChannelNetwork) -> Result<EquivalenceReport> {
    check_equivalence_with_cap(net, DEFAULT_STATE_CAP)
}

pub fn check_equivalence_with_cap(net: &MultiChannelNetwork, cap: usize) -> Result<EquivalenceReport> {
    let vg = build_virtual(net)?;
    let vspace = StateSpace::enumerate_with_cap(&vg.single_channel_network()?, cap)?;
    let mspace = StateSpace::enumerate_with_cap(net, cap)?;
    let nu = net.rates().nu();
    let mut report = EquivalenceReport {
        passed: false,
        virtual_states: vspace.len(),
        multichannel_states: mspace.len(),
        transitions_checked: 0,
        max_stationary_error: f64::NAN,
        counterexample: None,
    };
    if vspace.len() != mspace.len() {
        report.counterexample = Some(format!(
            "{} virtual states against {} multi-channel states",
            vspace.len(),
            mspace.len()
        ));
        return Ok(report);
    }

    // image of each virtual state, checked to be a bijection
    let mut image = Vec::with_capacity(vspace.len());
    let mut seen = vec![false; mspace.len()];
    for k in 0..vspace.len() {
        let x = vg.to_multichannel(vspace.state(k))?;
        let Some(m) = mspace.index_of(x.values()) else {
            report.counterexample = Some(format!("virtual state {k} maps to infeasible {x}"));
            return Ok(report);
        };
        if std::mem::replace(&mut seen[m], true) {
            report.counterexample = Some(format!("two virtual states map to {x}"));
            return Ok(report);
        }
        if vg.from_multichannel(&x)? != vspace.state(k) {
            report.counterexample = Some(format!("round trip through {x} is not the identity"));
            return Ok(report);
        }
        image.push(m);
    }

    for k in 0..vspace.len() {
        let (vt, mt) = (vspace.transitions(k), mspace.transitions(image[k]));
        if vt.len() != mt.len() {
            report.counterexample = Some(format!(
                "{} has {} moves virtually and {} directly",
                mspace.activity_state(image[k]),
                vt.len(),
                mt.len()
            ));
            return Ok(report);
        }
        for t in vt {
            let target = image[t.target as usize];
            let rate = vspace.rate(t, nu);
            let matched = mt
                .iter()
                .find(|u| u.target as usize == target)
                .map(|u| mspace.rate(u, nu));
            match matched {
                Some(r) if r == rate => report.transitions_checked += 1,
                _ => {
                    report.counterexample = Some(format!(
                        "move {} -> {} has rate {rate} virtually and {matched:?} directly",
                        mspace.activity_state(image[k]),
                        mspace.activity_state(target)
                    ));
                    return Ok(report);
                }
            }
        }
    }

    let pv = stationary_distribution(&vspace, nu)?;
    let pm = stationary_distribution(&mspace, nu)?;
    report.max_stationary_error = (0..vspace.len())
        .map(|k| (pv[k] - pm[image[k]]).abs() / pm[image[k]])
        .fold(0.0, f64::max);
    if !(report.max_stationary_error <= 1e-12) {
        report.counterexample = Some(format!(
            "stationary laws differ by {:.3e} relative",
            report.max_stationary_error
        ));
        return Ok(report);
    }
    report.passed = true;
    Ok(report)
}
