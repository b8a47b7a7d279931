//! Conductance lower bound on the mixing time.
//!
//! For a worst pair of dominant states `(s, s')` the bottleneck set is the
//! basin `S = {x : Delta(s, x) < Gamma}`. Every path out of it passes a state
//! with `A - Gamma` active nodes, so its conductance decays like
//! `nu^-(Gamma - 1)`.

use std::collections::VecDeque;

use serde::Serialize;

use super::hitting::fit_exponent;
use super::spectral::{spectral_gap, SPECTRAL_STATE_LIMIT};
use super::starvation::gamma_from_heights;
use super::stationary::log_stationary;
use super::{dominant_height_matrix, validate_grid, ExponentFit, Height};
use crate::error::{Error, Result};
use crate::state_space::{level_tolerance, ActivityState, StateSpace};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingRow {
    pub nu: f64,
    /// Stationary flow `Q(S, S^c)` across the boundary.
    pub flow: f64,
    pub set_mass: f64,
    pub conductance: f64,
    /// `(1/2 - epsilon) / conductance`
    pub bound: f64,
    pub spectral_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingReport {
    pub epsilon: f64,
    pub gamma: Height,
    pub pair: [ActivityState; 2],
    /// Number of states in the set actually used (the basin or its complement).
    pub set_size: usize,
    pub complement_used: bool,
    /// Levels of the basin states that have a neighbour outside it.
    pub boundary_levels: Vec<Height>,
    /// True when every boundary state sits exactly at level `A - Gamma + 1`.
    pub boundary_ok: bool,
    pub rows: Vec<MixingRow>,
    pub conductance_exponent: ExponentFit,
    pub bound_exponent: ExponentFit,
    pub relaxation_exponent: Option<ExponentFit>,
    /// Limit of the bound exponent: `Gamma - 1`.
    pub predicted_exponent: f64,
}

/// Returns `None` when there is a single dominant state. Spectral gaps are
/// included for spaces of at most [`SPECTRAL_STATE_LIMIT`] states.
pub fn mixing_bound(space: &StateSpace, nu_grid: &[f64], epsilon: f64) -> Result<Option<MixingReport>> {
    build(space, nu_grid, epsilon, true)
}

/// Same as [`mixing_bound`] without the spectral diagnostics.
pub fn conductance_bound(space: &StateSpace, nu_grid: &[f64], epsilon: f64) -> Result<Option<MixingReport>> {
    build(space, nu_grid, epsilon, false)
}

fn build(space: &StateSpace, nu_grid: &[f64], epsilon: f64, spectral: bool) -> Result<Option<MixingReport>> {
    validate_grid(nu_grid)?;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let heights = dominant_height_matrix(space);
    let Some(gamma) = gamma_from_heights(&heights) else {
        return Ok(None);
    };
    let dom = space.dominant();
    let tol = level_tolerance(space.max_level());
    let (p, q) = (0..dom.len())
        .flat_map(|p| (0..dom.len()).map(move |q| (p, q)))
        .find(|&(p, q)| heights[p][q] >= gamma - tol)
        .expect("gamma is attained");
    let (s, s2) = (dom[p], dom[q]);

    // Basin of s below height gamma.
    let floor = space.max_level() - gamma + tol;
    let mut inside = vec![false; space.len()];
    inside[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(k) = queue.pop_front() {
        for t in space.transitions(k) {
            let j = t.target as usize;
            if !inside[j] && space.level(j) > floor {
                inside[j] = true;
                queue.push_back(j);
            }
        }
    }
    debug_assert!(!inside[s2]);

    let mut boundary_levels: Vec<f64> = (0..space.len())
        .filter(|&k| inside[k] && space.transitions(k).iter().any(|t| !inside[t.target as usize]))
        .map(|k| space.level(k))
        .collect();
    boundary_levels.sort_by(f64::total_cmp);
    boundary_levels.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let expected = space.max_level() - gamma + 1.0;
    let boundary_ok = boundary_levels.iter().all(|&l| (l - expected).abs() <= tol);

    let largest = *nu_grid.last().expect("validated grid");
    let log_pi = log_stationary(space, largest)?;
    let basin_mass: f64 = (0..space.len()).filter(|&k| inside[k]).map(|k| log_pi[k].exp()).sum();
    let complement_used = basin_mass > 0.5;
    let member = |k: usize| inside[k] != complement_used;
    let set_size = (0..space.len()).filter(|&k| member(k)).count();

    let rows = nu_grid
        .iter()
        .map(|&nu| {
            let log_pi = log_stationary(space, nu)?;
            let mut flow = 0.0;
            let mut set_mass = 0.0;
            for k in (0..space.len()).filter(|&k| member(k)) {
                let pk = log_pi[k].exp();
                set_mass += pk;
                for t in space.transitions(k) {
                    if !member(t.target as usize) {
                        flow += pk * space.rate(t, nu);
                    }
                }
            }
            let conductance = flow / set_mass;
            let spectral_gap = if spectral && space.len() <= SPECTRAL_STATE_LIMIT {
                Some(spectral_gap(space, nu)?)
            } else {
                None
            };
            Ok(MixingRow {
                nu,
                flow,
                set_mass,
                conductance,
                bound: (0.5 - epsilon) / conductance,
                spectral_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let series = |f: &dyn Fn(&MixingRow) -> f64| -> Vec<(f64, f64)> { rows.iter().map(|r| (r.nu, f(r))).collect() };
    let relaxation_exponent = rows
        .iter()
        .all(|r| r.spectral_gap.is_some_and(|g| g > 0.0))
        .then(|| fit_exponent(&series(&|r| 1.0 / r.spectral_gap.unwrap())));

    Ok(Some(MixingReport {
        epsilon,
        gamma: Height(gamma),
        pair: [space.activity_state(s), space.activity_state(s2)],
        set_size,
        complement_used,
        boundary_levels: boundary_levels.into_iter().map(Height).collect(),
        boundary_ok,
        conductance_exponent: fit_exponent(&series(&|r| r.conductance)),
        bound_exponent: fit_exponent(&series(&|r| r.bound)),
        relaxation_exponent,
        predicted_exponent: gamma - 1.0,
        rows,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflict_graph::{ConflictGraph, MultiChannelNetwork, RateModel};

    fn space(g: ConflictGraph, c: usize) -> StateSpace {
        StateSpace::enumerate(&MultiChannelNetwork::shared(g, c, RateModel::homogeneous(10.0)).unwrap())
            .unwrap()
    }

    const GRID: [f64; 3] = [1e2, 1e3, 1e4];

    #[test]
    fn c4_basin_and_exponents() {
        let s = space(ConflictGraph::cycle(4).unwrap(), 1);
        let m = mixing_bound(&s, &GRID, 0.25).unwrap().unwrap();
        assert_eq!(m.set_size, 3);
        assert!(!m.complement_used);
        assert!(m.boundary_ok);
        assert_eq!(m.boundary_levels, vec![Height(1.0)]);
        assert!((m.conductance_exponent.slope + 1.0).abs() < 0.15);
        assert!((m.bound_exponent.slope - 1.0).abs() < 0.15);
        assert_eq!(m.predicted_exponent, 1.0);
        // hand computation: Q = 2 nu / Z and pi(S) = (nu^2 + 2 nu) / Z
        for r in &m.rows {
            let z = 1.0 + 4.0 * r.nu + 2.0 * r.nu * r.nu;
            assert!((r.flow - 2.0 * r.nu / z).abs() < 1e-12 * r.flow);
            assert!((r.set_mass - (r.nu * r.nu + 2.0 * r.nu) / z).abs() < 1e-12);
        }
    }

    #[test]
    fn k3_bound_is_flat() {
        let s = space(ConflictGraph::complete(3).unwrap(), 1);
        let m = mixing_bound(&s, &GRID, 0.25).unwrap().unwrap();
        assert!(m.bound_exponent.slope.abs() < 0.15);
        assert!(m.boundary_ok);
    }

    #[test]
    fn bound_vanishes_as_epsilon_approaches_half() {
        let s = space(ConflictGraph::cycle(4).unwrap(), 1);
        let near = mixing_bound(&s, &GRID, 0.5 - 1e-9).unwrap().unwrap();
        assert!(near.rows.iter().all(|r| r.bound < 1e-4));
        assert!(mixing_bound(&s, &GRID, 0.5).is_err());
    }

    #[test]
    fn single_dominant_is_undefined() {
        let s = space(ConflictGraph::path(3).unwrap(), 1);
        assert!(mixing_bound(&s, &GRID, 0.25).unwrap().is_none());
    }

    #[test]
    fn boundary_property_on_larger_graphs() {
        for (g, c) in [
            (ConflictGraph::grid(2, 3).unwrap(), 2),
            (ConflictGraph::cycle(6).unwrap(), 2),
            (ConflictGraph::petersen().unwrap(), 1),
        ] {
            let s = space(g, c);
            if let Some(m) = mixing_bound(&s, &GRID, 0.25).unwrap() {
                assert!(m.boundary_ok);
                assert!(
                    (m.bound_exponent.slope - m.predicted_exponent).abs() < 0.15,
                    "{} vs {}",
                    m.bound_exponent.slope,
                    m.predicted_exponent
                );
            }
        }
    }
}
