//! Exact expected hitting times by first-step analysis on the uniformized
//! chain, and their growth exponents in `nu`.

use serde::Serialize;

use super::height::minimax_edge_path;
use super::linsolve::{solve, AbsorbingSystem, SolverOptions};
use super::stationary::log_stationary;
use super::{ols_slope, validate_grid};
use crate::error::{Error, Result};
use crate::state_space::StateSpace;

fn target_mask(space: &StateSpace, target: &[usize]) -> Result<Vec<bool>> {
    if target.is_empty() {
        return Err(Error::invalid("target set must be non-empty"));
    }
    let mut mask = vec![false; space.len()];
    for &k in target {
        if k >= space.len() {
            return Err(Error::invalid(format!("unknown state index {k}")));
        }
        mask[k] = true;
    }
    Ok(mask)
}

/// Expected continuous-time hitting time of `target` from every state
/// (zero on the target itself).
pub fn hitting_times_from_all(
    space: &StateSpace,
    nu: f64,
    target: &[usize],
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let in_target = target_mask(space, target)?;
    let chain = space.uniformized_matrix(nu)?;
    let mut pos = vec![usize::MAX; space.len()];
    let mut unknowns = Vec::new();
    for k in 0..space.len() {
        if !in_target[k] {
            pos[k] = unknowns.len();
            unknowns.push(k);
        }
    }
    let log_pi = log_stationary(space, nu)?;
    let peak = unknowns.iter().map(|&k| log_pi[k]).fold(f64::NEG_INFINITY, f64::max);
    let mut sys = AbsorbingSystem {
        rows: Vec::with_capacity(unknowns.len()),
        absorb: Vec::with_capacity(unknowns.len()),
        rhs: vec![1.0; unknowns.len()],
        weights: Some(unknowns.iter().map(|&k| (log_pi[k] - peak).exp()).collect()),
    };
    for &k in &unknowns {
        let mut row = Vec::new();
        let mut absorbed = 0.0;
        for (j, p) in chain.row(k) {
            if in_target[j] {
                absorbed += p;
            } else {
                row.push((pos[j], p));
            }
        }
        sys.rows.push(row);
        sys.absorb.push(absorbed);
    }
    let steps = solve(&sys, opts)?;
    Ok((0..space.len())
        .map(|k| {
            if in_target[k] {
                0.0
            } else {
                steps[pos[k]] / chain.q_max
            }
        })
        .collect())
}

/// `E tau` from `start` to `target` at activation scale `nu`.
pub fn exact_hitting_time(space: &StateSpace, nu: f64, start: usize, target: &[usize]) -> Result<f64> {
    if target.contains(&start) {
        return Err(Error::invalid("start state lies in the target set"));
    }
    if start >= space.len() {
        return Err(Error::invalid(format!("unknown state index {start}")));
    }
    Ok(hitting_times_from_all(space, nu, target, &SolverOptions::default())?[start])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitPoint {
    pub nu: f64,
    pub value: f64,
    /// `log_nu(value)`
    pub log_nu_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Least-squares slope of `ln value` against `ln nu`.
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<FitPoint>,
}

pub fn fit_exponent(points: &[(f64, f64)]) -> ExponentFit {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = ols_slope(&xs, &ys);
    ExponentFit {
        slope,
        intercept,
        points: points
            .iter()
            .map(|&(nu, value)| FitPoint {
                nu,
                value,
                log_nu_value: value.ln() / nu.ln(),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingExponent {
    pub fit: ExponentFit,
    /// Limiting exponent from the energy landscape, when `start` and the
    /// target are dominant.
    pub predicted: Option<f64>,
}

pub fn hitting_exponent(
    space: &StateSpace,
    start: usize,
    target: &[usize],
    nu_grid: &[f64],
) -> Result<HittingExponent> {
    validate_grid(nu_grid)?;
    let points = nu_grid
        .iter()
        .map(|&nu| Ok((nu, exact_hitting_time(space, nu, start, target)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(HittingExponent {
        fit: fit_exponent(&points),
        predicted: predicted_hitting_exponent(space, start, target),
    })
}

/// Limit of `log_nu E tau` for transitions between dominant states.
///
/// Each move toggles one node; its cost is the level deficit of the
/// endpoint in which that node is active. The exponent is the minimax cost
/// over paths, which reduces to `Delta(start, target) - 1` for homogeneous
/// rates.
pub fn predicted_hitting_exponent(space: &StateSpace, start: usize, target: &[usize]) -> Option<f64> {
    let dominant = |k: &usize| space.is_dominant(*k);
    if !dominant(&start) || !target.iter().all(dominant) || target.contains(&start) || target.is_empty() {
        return None;
    }
    let top = space.level(start);
    Some(minimax_edge_path(space, &[start], target, |x, y| {
        let upper = if space.activity(x) > space.activity(y) { x } else { y };
        top - space.level(upper)
    }))
}
