use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::state_space::StateSpace;

/// Largest state space for which the dense eigensolve is attempted.
pub const SPECTRAL_STATE_LIMIT: usize = 1500;

/// Spectral gap of the generator. Reversibility makes
/// `sqrt(q(x,y) q(y,x))` a symmetric similarity transform of it.
pub fn spectral_gap(space: &StateSpace, nu: f64) -> Result<f64> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    let n = space.len();
    if n > SPECTRAL_STATE_LIMIT {
        return Err(Error::CapExceeded {
            what: "spectral gap state count",
            cap: SPECTRAL_STATE_LIMIT as u128,
            bound: n as u128,
        });
    }
    if n < 2 {
        return Ok(0.0);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        for t in space.transitions(x) {
            let y = t.target as usize;
            if y > x {
                let back = space
                    .transitions(y)
                    .iter()
                    .find(|u| u.target as usize == x)
                    .expect("transitions come in reverse pairs");
                let v = (space.rate(t, nu) * space.rate(back, nu)).sqrt();
                m[(x, y)] = -v;
                m[(y, x)] = -v;
            }
        }
        m[(x, x)] = space.exit_rate(x, nu);
    }
    let mut eig = SymmetricEigen::new(m).eigenvalues.as_slice().to_vec();
    eig.sort_by(f64::total_cmp);
    Ok(eig[1])
}
