use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::state_space::StateSpace;

/// Asymptotic aggregate throughput `A(C) / C`, exact.
pub fn aggregate_throughput(space: &StateSpace) -> Result<Ratio<u64>> {
    if !space.is_homogeneous() {
        return Err(Error::Unsupported(
            "aggregate throughput is only characterized for homogeneous rates".into(),
        ));
    }
    Ok(Ratio::new(
        space.max_activity() as u64,
        space.num_channels() as u64,
    ))
}

/// Limit of each node's throughput as `nu` grows: the stationary law is
/// uniform on the dominant states in the limit, so node `i` gets
/// `|{s dominant : s_i != 0}| / (C |D|)`.
pub fn asymptotic_node_throughput(space: &StateSpace) -> Vec<Ratio<u64>> {
    let denom = (space.num_channels() * space.dominant().len()) as u64;
    (0..space.num_nodes())
        .map(|i| {
            let hits = space
                .dominant()
                .iter()
                .filter(|&&k| space.state(k)[i] != 0)
                .count() as u64;
            Ratio::new(hits, denom)
        })
        .collect()
}

/// Asymptotic Jain fairness index, `None` when every node starves.
pub fn jain_index(space: &StateSpace) -> Option<Ratio<u64>> {
    // Scale by C|D| so the computation stays in integers.
    let denom = (space.num_channels() * space.dominant().len()) as u64;
    let counts: Vec<u64> = asymptotic_node_throughput(space)
        .iter()
        .map(|r| (r * denom).to_integer())
        .collect();
    let sum: u64 = counts.iter().sum();
    let sq: u64 = counts.iter().map(|c| c * c).sum();
    if sq == 0 {
        return None;
    }
    Some(Ratio::new(sum * sum, counts.len() as u64 * sq))
}
