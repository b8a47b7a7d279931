use crate::error::{Error, Result};
use crate::state_space::StateSpace;

/// Normalized `ln pi(x)`, where `pi(x)` is proportional to `nu^level(x)`.
pub fn log_stationary(space: &StateSpace, nu: f64) -> Result<Vec<f64>> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    let ln_nu = nu.ln();
    let raw: Vec<f64> = space.levels().iter().map(|&l| l * ln_nu).collect();
    let peak = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = peak + raw.iter().map(|&r| (r - peak).exp()).sum::<f64>().ln();
    Ok(raw.into_iter().map(|r| r - log_z).collect())
}

/// Product-form stationary distribution of the activity process.
pub fn stationary_distribution(space: &StateSpace, nu: f64) -> Result<Vec<f64>> {
    Ok(log_stationary(space, nu)?.into_iter().map(f64::exp).collect())
}

/// Finite-`nu` throughput of every node: the stationary probability that it
/// is active, divided by the channel count.
pub fn node_throughput(space: &StateSpace, nu: f64) -> Result<Vec<f64>> {
    let pi = stationary_distribution(space, nu)?;
    let c = space.num_channels() as f64;
    let mut out = vec![0.0; space.num_nodes()];
    for (k, p) in pi.iter().enumerate() {
        for (i, &v) in space.state(k).iter().enumerate() {
            if v != 0 {
                out[i] += p;
            }
        }
    }
    Ok(out.into_iter().map(|v| v / c).collect())
}
