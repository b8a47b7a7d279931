use serde::{Serialize, Serializer};

use super::height::dominant_height_matrix;
use crate::state_space::StateSpace;

/// Starvation status of a single node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeStarvation {
    /// Worst height from a dominant state where the node is idle to the
    /// dominant states where it is active.
    Index(f64),
    /// Idle in every dominant state.
    PermanentStarver,
    /// Active in every dominant state.
    NeverStarves,
}

impl NodeStarvation {
    pub fn index(self) -> Option<f64> {
        match self {
            NodeStarvation::Index(v) => Some(v),
            _ => None,
        }
    }
}

impl Serialize for NodeStarvation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NodeStarvation::Index(v) => super::Height(*v).serialize(s),
            NodeStarvation::PermanentStarver => s.serialize_str("permanent-starver"),
            NodeStarvation::NeverStarves => s.serialize_str("never-starves"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarvationIndices {
    pub per_node: Vec<NodeStarvation>,
    /// Worst defined per-node index; `None` when no node qualifies.
    pub network: Option<f64>,
}

pub fn starvation_indices(space: &StateSpace) -> StarvationIndices {
    let heights = dominant_height_matrix(space);
    starvation_from_heights(space, &heights)
}

pub(crate) fn starvation_from_heights(space: &StateSpace, heights: &[Vec<f64>]) -> StarvationIndices {
    let dom = space.dominant();
    let per_node: Vec<NodeStarvation> = (0..space.num_nodes())
        .map(|i| {
            let (active, idle): (Vec<usize>, Vec<usize>) =
                (0..dom.len()).partition(|&p| space.state(dom[p])[i] != 0);
            if active.is_empty() {
                NodeStarvation::PermanentStarver
            } else if idle.is_empty() {
                NodeStarvation::NeverStarves
            } else {
                let worst = idle
                    .iter()
                    .map(|&s| {
                        active
                            .iter()
                            .map(|&t| heights[s][t])
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                NodeStarvation::Index(worst)
            }
        })
        .collect();
    let network = per_node
        .iter()
        .filter_map(|s| s.index())
        .reduce(f64::max);
    StarvationIndices { per_node, network }
}

/// Worst height between two dominant states; `None` with a single dominant.
pub fn gamma(space: &StateSpace) -> Option<f64> {
    gamma_from_heights(&dominant_height_matrix(space))
}

pub(crate) fn gamma_from_heights(heights: &[Vec<f64>]) -> Option<f64> {
    if heights.len() < 2 {
        return None;
    }
    heights.iter().flatten().copied().reduce(f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflict_graph::{ConflictGraph, MultiChannelNetwork, RateModel};

    fn space(g: ConflictGraph, c: usize) -> StateSpace {
        StateSpace::enumerate(&MultiChannelNetwork::shared(g, c, RateModel::homogeneous(10.0)).unwrap())
            .unwrap()
    }

    #[test]
    fn c4_single_channel() {
        let s = space(ConflictGraph::cycle(4).unwrap(), 1);
        let st = starvation_indices(&s);
        assert_eq!(st.per_node, vec![NodeStarvation::Index(2.0); 4]);
        assert_eq!(st.network, Some(2.0));
        assert_eq!(gamma(&s), Some(2.0));
    }

    #[test]
    fn k3_single_channel() {
        let s = space(ConflictGraph::complete(3).unwrap(), 1);
        let st = starvation_indices(&s);
        assert_eq!(st.per_node, vec![NodeStarvation::Index(1.0); 3]);
        assert_eq!(st.network, Some(1.0));
        assert_eq!(gamma(&s), Some(1.0));
    }

    #[test]
    fn path_has_unique_dominant() {
        let s = space(ConflictGraph::path(3).unwrap(), 1);
        let st = starvation_indices(&s);
        assert_eq!(
            st.per_node,
            vec![
                NodeStarvation::NeverStarves,
                NodeStarvation::PermanentStarver,
                NodeStarvation::NeverStarves
            ]
        );
        assert_eq!(st.network, None);
        assert_eq!(gamma(&s), None);
        assert_eq!(
            serde_json::to_string(&st.per_node).unwrap(),
            r#"["never-starves","permanent-starver","never-starves"]"#
        );
    }

    #[test]
    fn upsilon_bounded_by_gamma() {
        for g in [
            ConflictGraph::petersen().unwrap(),
            ConflictGraph::grid(2, 4).unwrap(),
            ConflictGraph::cycle(6).unwrap(),
            ConflictGraph::star(3).unwrap(),
        ] {
            for c in 1..=2 {
                let s = space(g.clone(), c);
                if let (Some(u), Some(gm)) = (starvation_indices(&s).network, gamma(&s)) {
                    assert!(u <= gm);
                    assert!(u >= 1.0);
                }
            }
        }
    }
}
