//! Electrical-network view of the uniformized chain. Edge `(x, y)` carries
//! conductance `pi(x) P(x, y)`; by reversibility this is symmetric.

use serde::Serialize;

use super::height::minimax_edge_path;
use super::linsolve::{solve, AbsorbingSystem, SolverOptions};
use super::stationary::log_stationary;
use crate::error::{Error, Result};
use crate::state_space::StateSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Resistances {
    pub nu: f64,
    /// `1 / (pi(x) P_x(T_A < T_x^+))`
    pub effective: f64,
    /// Minimax edge resistance over paths from `x` to `A`.
    pub critical: f64,
}

fn check(space: &StateSpace, x: usize, set: &[usize]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::invalid("target set must be non-empty"));
    }
    if x >= space.len() || set.iter().any(|&k| k >= space.len()) {
        return Err(Error::invalid("unknown state index"));
    }
    if set.contains(&x) {
        return Err(Error::invalid("start state lies in the target set"));
    }
    Ok(())
}

/// `ln r(x, y)` for every transition, in transition-list order.
fn log_edge_resistance(space: &StateSpace, nu: f64) -> Result<impl Fn(usize, usize) -> f64 + '_> {
    let log_pi = log_stationary(space, nu)?;
    let ln_q = space.uniformization_rate(nu).ln();
    Ok(move |x: usize, y: usize| {
        let t = space
            .transitions(x)
            .iter()
            .find(|t| t.target as usize == y)
            .expect("edge of the transition graph");
        -(log_pi[x] + space.rate(t, nu).ln() - ln_q)
    })
}

pub fn critical_resistance(space: &StateSpace, nu: f64, x: usize, set: &[usize]) -> Result<f64> {
    check(space, x, set)?;
    let cost = log_edge_resistance(space, nu)?;
    Ok(minimax_edge_path(space, &[x], set, cost).exp())
}

pub fn resistances(space: &StateSpace, nu: f64, x: usize, set: &[usize]) -> Result<Resistances> {
    check(space, x, set)?;
    let chain = space.uniformized_matrix(nu)?;
    // g(y) = P_y(reach the set before x), solved on everything else
    let mut role = vec![0u8; space.len()];
    role[x] = 1;
    for &k in set {
        role[k] = 2;
    }
    let mut pos = vec![usize::MAX; space.len()];
    let mut unknowns = Vec::new();
    for k in 0..space.len() {
        if role[k] == 0 {
            pos[k] = unknowns.len();
            unknowns.push(k);
        }
    }
    let mut sys = AbsorbingSystem {
        rows: Vec::with_capacity(unknowns.len()),
        absorb: Vec::with_capacity(unknowns.len()),
        rhs: Vec::with_capacity(unknowns.len()),
        weights: None,
    };
    for &k in &unknowns {
        let (mut row, mut out, mut hit) = (Vec::new(), 0.0, 0.0);
        for (j, p) in chain.row(k) {
            match role[j] {
                0 => row.push((pos[j], p)),
                1 => out += p,
                _ => {
                    out += p;
                    hit += p;
                }
            }
        }
        sys.rows.push(row);
        sys.absorb.push(out);
        sys.rhs.push(hit);
    }
    let g = solve(&sys, &SolverOptions::default())?;
    let escape: f64 = chain
        .row(x)
        .map(|(j, p)| match role[j] {
            0 => p * g[pos[j]],
            2 => p,
            _ => 0.0,
        })
        .sum();
    let log_pi = log_stationary(space, nu)?;
    Ok(Resistances {
        nu,
        effective: (-log_pi[x] - escape.ln()).exp(),
        critical: critical_resistance(space, nu, x, set)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::stationary_distribution;
    use crate::conflict_graph::{ConflictGraph, MultiChannelNetwork, RateModel};

    fn space(g: ConflictGraph, c: usize) -> StateSpace {
        StateSpace::enumerate(&MultiChannelNetwork::shared(g, c, RateModel::homogeneous(10.0)).unwrap())
            .unwrap()
    }

    #[test]
    fn single_edge_is_its_own_resistance() {
        // One node, one channel: the chain 0 <-> 1.
        let s = space(ConflictGraph::empty(1).unwrap(), 1);
        let r = resistances(&s, 5.0, 0, &[1]).unwrap();
        let pi = stationary_distribution(&s, 5.0).unwrap();
        let chain = s.uniformized_matrix(5.0).unwrap();
        let p = chain.row(0).next().unwrap().1;
        let edge = 1.0 / (pi[0] * p);
        assert!((r.effective - edge).abs() < 1e-12 * edge);
        assert!((r.critical - edge).abs() < 1e-12 * edge);
    }

    #[test]
    fn k2_series_reduction() {
        // 10 -- 00 -- 01 is a series circuit of two resistors.
        let s = space(ConflictGraph::complete(2).unwrap(), 1);
        let (a, e, b) = (
            s.index_of(&[1, 0]).unwrap(),
            s.index_of(&[0, 0]).unwrap(),
            s.index_of(&[0, 1]).unwrap(),
        );
        for nu in [0.5, 3.0, 1e3] {
            let pi = stationary_distribution(&s, nu).unwrap();
            let chain = s.uniformized_matrix(nu).unwrap();
            let p = |x: usize, y: usize| chain.row(x).find(|&(j, _)| j == y).unwrap().1;
            let series = 1.0 / (pi[a] * p(a, e)) + 1.0 / (pi[e] * p(e, b));
            let r = resistances(&s, nu, a, &[b]).unwrap();
            assert!((r.effective - series).abs() <= 1e-9 * series, "{} vs {series}", r.effective);
            assert!(r.critical <= r.effective);
        }
    }

    #[test]
    fn c4_effective_tracks_critical() {
        let s = space(ConflictGraph::cycle(4).unwrap(), 1);
        let (x, y) = (s.dominant()[0], s.dominant()[1]);
        let ratios: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&nu| {
                let r = resistances(&s, nu, x, &[y]).unwrap();
                assert!(r.effective.is_finite() && r.effective > 0.0);
                assert!(r.critical <= r.effective * (1.0 + 1e-12));
                r.effective / r.critical
            })
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo < 10.0, "{ratios:?}");
    }

    #[test]
    fn rejects_overlap() {
        let s = space(ConflictGraph::complete(2).unwrap(), 1);
        assert!(resistances(&s, 2.0, 1, &[1]).is_err());
    }
}
