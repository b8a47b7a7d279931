//! Solver for absorbing-chain systems
//!
//! ```text
//! d(u) h(u) - sum_v a(u,v) h(v) = b(u),   d(u) = e(u) + sum_v a(u,v)
//! ```
//!
//! with `a, e, b >= 0`. These are the first-step equations of a sub-stochastic
//! chain, where `e(u)` is the one-step mass absorbed outside the unknowns.
//! Elimination keeps every diagonal as a sum of non-negative terms
//! (Grassmann–Taksar–Heyman style), so there is no cancellation even when
//! the exit probabilities span many orders of magnitude.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Largest system handled by dense elimination.
    pub dense_limit: usize,
    /// Relative residual target for the iterative fallback and the
    /// acceptance threshold on the backward error of any solve.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_limit: 4096,
            tolerance: 1e-10,
            max_iterations: 200_000,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct AbsorbingSystem {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub absorb: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Reversible weights (stationary masses) for the iterative fallback.
    pub weights: Option<Vec<f64>>,
}

impl AbsorbingSystem {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn diagonal(&self, u: usize) -> f64 {
        self.absorb[u] + self.rows[u].iter().map(|&(_, a)| a).sum::<f64>()
    }

    /// Worst row-wise relative residual of `h`.
    pub fn backward_error(&self, h: &[f64]) -> f64 {
        (0..self.len())
            .map(|u| {
                let d = self.diagonal(u);
                let off: f64 = self.rows[u].iter().map(|&(v, a)| a * h[v]).sum();
                let off_abs: f64 = self.rows[u].iter().map(|&(v, a)| a * h[v].abs()).sum();
                let r = d * h[u] - off - self.rhs[u];
                let scale = d * h[u].abs() + off_abs + self.rhs[u].abs();
                if scale == 0.0 {
                    0.0
                } else {
                    r.abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }

    fn condition_estimate(&self) -> f64 {
        let (lo, hi) = (0..self.len())
            .map(|u| (self.absorb[u], self.diagonal(u)))
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), (e, d)| {
                let lo = if e > 0.0 { lo.min(e) } else { lo };
                (lo, hi.max(d))
            });
        hi / lo
    }
}

pub fn solve(sys: &AbsorbingSystem, opts: &SolverOptions) -> Result<Vec<f64>> {
    if sys.is_empty() {
        return Ok(Vec::new());
    }
    let h = if sys.len() <= opts.dense_limit {
        eliminate(sys)?
    } else {
        conjugate_gradient(sys, opts)?
    };
    let err = sys.backward_error(&h);
    if !(err <= opts.tolerance) || h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver {
            message: "residual above tolerance".into(),
            backward_error: err,
            condition: sys.condition_estimate(),
        });
    }
    Ok(h)
}

fn eliminate(sys: &AbsorbingSystem) -> Result<Vec<f64>> {
    let m = sys.len();
    let mut a = vec![0.0f64; m * m];
    for (u, row) in sys.rows.iter().enumerate() {
        for &(v, w) in row {
            if v != u {
                a[u * m + v] += w;
            }
        }
    }
    let mut e = sys.absorb.clone();
    let mut b = sys.rhs.clone();
    let mut d = vec![0.0; m];
    let mut cols = Vec::with_capacity(m);
    let mut lower = Vec::with_capacity(m);
    for k in 0..m {
        cols.clear();
        cols.extend((k + 1..m).filter(|&j| a[k * m + j] != 0.0));
        d[k] = e[k] + cols.iter().map(|&j| a[k * m + j]).sum::<f64>();
        if !(d[k] > 0.0) {
            return Err(Error::Solver {
                message: format!("unknown {k} cannot reach the absorbing set"),
                backward_error: f64::INFINITY,
                condition: f64::INFINITY,
            });
        }
        lower.clear();
        lower.extend((k + 1..m).filter(|&i| a[i * m + k] != 0.0));
        for &i in &lower {
            let f = a[i * m + k] / d[k];
            a[i * m + k] = 0.0;
            for &j in &cols {
                if j != i {
                    a[i * m + j] += f * a[k * m + j];
                }
            }
            e[i] += f * e[k];
            b[i] += f * b[k];
        }
    }
    let mut h = vec![0.0; m];
    for k in (0..m).rev() {
        let s: f64 = (k + 1..m).map(|j| a[k * m + j] * h[j]).sum();
        h[k] = (b[k] + s) / d[k];
    }
    Ok(h)
}

/// Jacobi-preconditioned CG on the symmetrized system `W (D - A) h = W b`.
fn conjugate_gradient(sys: &AbsorbingSystem, opts: &SolverOptions) -> Result<Vec<f64>> {
    let Some(w) = &sys.weights else {
        return Err(Error::Solver {
            message: "system too large for dense elimination and no reversible weights given".into(),
            backward_error: f64::INFINITY,
            condition: sys.condition_estimate(),
        });
    };
    let m = sys.len();
    let diag: Vec<f64> = (0..m).map(|u| w[u] * sys.diagonal(u)).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        for u in 0..m {
            let off: f64 = sys.rows[u].iter().map(|&(v, a)| a * x[v]).sum();
            out[u] = diag[u] * x[u] - w[u] * off;
        }
    };
    let rhs: Vec<f64> = (0..m).map(|u| w[u] * sys.rhs[u]).collect();
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    // Warm start from the Jacobi guess.
    let mut x: Vec<f64> = (0..m).map(|u| rhs[u] / diag[u]).collect();
    let mut ax = vec![0.0; m];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = (0..m).map(|u| rhs[u] - ax[u]).collect();
    let mut z: Vec<f64> = (0..m).map(|u| r[u] / diag[u]).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; m];
    for _ in 0..opts.max_iterations {
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= opts.tolerance * rhs_norm * 1e-2 {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for u in 0..m {
            x[u] += alpha * p[u];
            r[u] -= alpha * ap[u];
            z[u] = r[u] / diag[u];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for u in 0..m {
            p[u] = z[u] + beta * p[u];
        }
    }
    Err(Error::Solver {
        message: "conjugate gradient did not converge".into(),
        backward_error: sys.backward_error(&x),
        condition: sys.condition_estimate(),
    })
}
