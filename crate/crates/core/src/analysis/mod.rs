//! Asymptotic and exact quantities of the activity process: stationary law,
//! throughput and fairness, communication heights and starvation indices,
//! hitting times, resistances and the conductance bound on mixing.

pub mod height;
pub mod hitting;
pub mod linsolve;
pub mod mixing;
pub mod resistance;
pub mod spectral;
pub mod starvation;
pub mod stationary;
pub mod throughput;

pub use height::{communication_height, dominant_height_matrix, height_matrix};
pub use hitting::{
    exact_hitting_time, fit_exponent, hitting_exponent, hitting_times_from_all,
    predicted_hitting_exponent, ExponentFit, FitPoint, HittingExponent,
};
pub use mixing::{conductance_bound, mixing_bound, MixingReport, MixingRow};
pub use resistance::{critical_resistance, resistances, Resistances};
pub use spectral::{spectral_gap, SPECTRAL_STATE_LIMIT};
pub use starvation::{gamma, starvation_indices, NodeStarvation, StarvationIndices};
pub use stationary::{log_stationary, node_throughput, stationary_distribution};
pub use throughput::{aggregate_throughput, asymptotic_node_throughput, jain_index};

use num_rational::Ratio;
use serde::{Serialize, Serializer};

/// Communication height or landscape level. Serializes as an integer when
/// integral, which is always the case for homogeneous rates.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Height(pub f64);

impl Height {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn as_integer(self) -> Option<i64> {
        (self.0.fract() == 0.0 && self.0.abs() < 9.0e15).then_some(self.0 as i64)
    }
}

impl Serialize for Height {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.as_integer() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_f64(self.0),
        }
    }
}

/// Value that is undefined for some instances; serializes the undefined
/// case as the string `"undefined"`.
#[derive(Clone, Debug, PartialEq)]
pub enum Marker<T> {
    Value(T),
    Undefined,
}

impl<T> Marker<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Marker::Value(v) => Some(v),
            Marker::Undefined => None,
        }
    }
}

impl<T> From<Option<T>> for Marker<T> {
    fn from(v: Option<T>) -> Self {
        v.map_or(Marker::Undefined, Marker::Value)
    }
}

impl<T: Serialize> Serialize for Marker<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Marker::Value(v) => v.serialize(s),
            Marker::Undefined => s.serialize_str("undefined"),
        }
    }
}

/// Exact rational with its floating value, e.g. `{"exact": "4/3", "value": 1.333..}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalValue {
    pub exact: String,
    pub value: f64,
}

impl From<Ratio<u64>> for RationalValue {
    fn from(r: Ratio<u64>) -> Self {
        let exact = if *r.denom() == 1 {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        };
        Self {
            exact,
            value: *r.numer() as f64 / *r.denom() as f64,
        }
    }
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub(crate) fn validate_grid(grid: &[f64]) -> crate::error::Result<()> {
    use crate::error::Error;
    if grid.len() < 3 {
        return Err(Error::invalid("a nu-grid needs at least three points"));
    }
    if grid.iter().any(|&v| !(v > 1.0 && v.is_finite())) {
        return Err(Error::invalid("nu-grid values must be finite and > 1"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("nu-grid must be strictly ascending"));
    }
    Ok(())
}

pub const DEFAULT_NU_GRID: [f64; 3] = [1e2, 1e3, 1e4];
