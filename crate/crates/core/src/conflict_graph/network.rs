use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ConflictGraph;
use crate::error::{Error, Result};

/// Activation-rate model. Deactivation rates are fixed at 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateModel {
    /// Every (node, channel) activates at rate `nu`.
    Homogeneous { nu: f64 },
    /// Node `i` activates on channel `c` at rate `nu^weights[i][c-1]`.
    HeterogeneousExponents { nu: f64, weights: Vec<Vec<f64>> },
}

impl RateModel {
    pub fn homogeneous(nu: f64) -> Self {
        RateModel::Homogeneous { nu }
    }

    pub fn nu(&self) -> f64 {
        match self {
            RateModel::Homogeneous { nu } | RateModel::HeterogeneousExponents { nu, .. } => *nu,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self, RateModel::Homogeneous { .. })
    }

    /// Same model with a different scaling parameter.
    pub fn with_nu(&self, nu: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            RateModel::Homogeneous { nu: v } | RateModel::HeterogeneousExponents { nu: v, .. } => {
                *v = nu
            }
        }
        out
    }

    /// Exponent `w` such that node `node` activates on `channel` (1-based) at rate `nu^w`.
    pub fn exponent(&self, node: usize, channel: usize) -> f64 {
        match self {
            RateModel::Homogeneous { .. } => 1.0,
            RateModel::HeterogeneousExponents { weights, .. } => weights[node][channel - 1],
        }
    }

    pub fn activation_rate(&self, node: usize, channel: usize, nu: f64) -> f64 {
        match self {
            RateModel::Homogeneous { .. } => nu,
            RateModel::HeterogeneousExponents { .. } => nu.powf(self.exponent(node, channel)),
        }
    }

    fn validate(&self, n: usize, c: usize) -> Result<()> {
        let nu = self.nu();
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::schema(format!("nu must be positive and finite, got {nu}")));
        }
        if let RateModel::HeterogeneousExponents { weights, .. } = self {
            if weights.len() != n {
                return Err(Error::schema(format!(
                    "weights has {} rows, expected one per node ({n})",
                    weights.len()
                )));
            }
            for (i, row) in weights.iter().enumerate() {
                if row.len() != c {
                    return Err(Error::schema(format!(
                        "weights row {i} has {} entries, expected {c}",
                        row.len()
                    )));
                }
                if let Some(w) = row.iter().find(|w| !w.is_finite()) {
                    return Err(Error::schema(format!("weight {w} of node {i} is not finite")));
                }
            }
        }
        Ok(())
    }
}

/// Edge block of the network file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSpec {
    Shared(Vec<[usize; 2]>),
    PerChannel(Vec<Vec<[usize; 2]>>),
}

/// On-disk JSON form of a network. `name` and `expected` are optional
/// extensions used by the verification corpus.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub num_nodes: usize,
    pub num_channels: usize,
    pub edges: EdgeSpec,
    pub rates: RateModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiChannelNetwork {
    num_nodes: usize,
    num_channels: usize,
    edge_sets: Vec<ConflictGraph>,
    shared: bool,
    rates: RateModel,
}

impl MultiChannelNetwork {
    /// Same conflict graph on every channel.
    pub fn shared(graph: ConflictGraph, num_channels: usize, rates: RateModel) -> Result<Self> {
        if num_channels == 0 {
            return Err(Error::schema("num_channels must be at least 1"));
        }
        let n = graph.num_nodes();
        Self::build(n, vec![graph; num_channels], true, rates)
    }

    pub fn per_channel(edge_sets: Vec<ConflictGraph>, rates: RateModel) -> Result<Self> {
        let Some(first) = edge_sets.first() else {
            return Err(Error::schema("num_channels must be at least 1"));
        };
        let n = first.num_nodes();
        if edge_sets.iter().any(|g| g.num_nodes() != n) {
            return Err(Error::schema("all channel graphs must share the node set"));
        }
        Self::build(n, edge_sets, false, rates)
    }

    fn build(n: usize, edge_sets: Vec<ConflictGraph>, shared: bool, rates: RateModel) -> Result<Self> {
        let c = edge_sets.len();
        if c > u8::MAX as usize {
            return Err(Error::schema(format!("at most 255 channels are supported, got {c}")));
        }
        rates.validate(n, c)?;
        Ok(Self {
            num_nodes: n,
            num_channels: c,
            edge_sets,
            shared,
            rates,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    /// Conflict graph of channel `channel` (1-based).
    pub fn channel_graph(&self, channel: usize) -> &ConflictGraph {
        &self.edge_sets[channel - 1]
    }

    pub fn edge_sets(&self) -> &[ConflictGraph] {
        &self.edge_sets
    }

    /// True when every channel has the same conflict graph.
    pub fn is_shared(&self) -> bool {
        self.shared || self.edge_sets.windows(2).all(|w| w[0] == w[1])
    }

    pub fn rates(&self) -> &RateModel {
        &self.rates
    }

    pub fn with_rates(&self, rates: RateModel) -> Result<Self> {
        rates.validate(self.num_nodes, self.num_channels)?;
        Ok(Self {
            rates,
            ..self.clone()
        })
    }

    /// Same shared conflict graph with a different channel count. Only
    /// defined for shared interference and homogeneous rates.
    pub fn with_channels(&self, num_channels: usize) -> Result<Self> {
        if !self.is_shared() {
            return Err(Error::Unsupported(
                "changing the channel count requires shared interference".into(),
            ));
        }
        if !self.rates.is_homogeneous() {
            return Err(Error::Unsupported(
                "changing the channel count requires homogeneous rates".into(),
            ));
        }
        Self::shared(self.edge_sets[0].clone(), num_channels, self.rates.clone())
    }

    pub fn from_file(file: &NetworkFile) -> Result<Self> {
        let n = file.num_nodes;
        let c = file.num_channels;
        if c == 0 {
            return Err(Error::schema("num_channels must be at least 1"));
        }
        let pairs = |list: &[[usize; 2]]| -> Vec<(usize, usize)> {
            list.iter().map(|&[i, j]| (i, j)).collect()
        };
        match &file.edges {
            EdgeSpec::Shared(list) => {
                Self::shared(ConflictGraph::new(n, pairs(list))?, c, file.rates.clone())
            }
            EdgeSpec::PerChannel(lists) => {
                if lists.len() != c {
                    return Err(Error::schema(format!(
                        "num_channels is {c} but {} per-channel edge lists were given",
                        lists.len()
                    )));
                }
                let graphs = lists
                    .iter()
                    .map(|l| ConflictGraph::new(n, pairs(l)))
                    .collect::<Result<Vec<_>>>()?;
                Self::per_channel(graphs, file.rates.clone())
            }
        }
    }

    pub fn to_file(&self, name: Option<String>) -> NetworkFile {
        let to_pairs =
            |g: &ConflictGraph| -> Vec<[usize; 2]> { g.edges().iter().map(|&(i, j)| [i, j]).collect() };
        let edges = if self.is_shared() {
            EdgeSpec::Shared(to_pairs(&self.edge_sets[0]))
        } else {
            EdgeSpec::PerChannel(self.edge_sets.iter().map(to_pairs).collect())
        };
        NetworkFile {
            name,
            num_nodes: self.num_nodes,
            num_channels: self.num_channels,
            edges,
            rates: self.rates.clone(),
            expected: None,
        }
    }
}

/// Reads and validates a network file.
pub fn parse_network(path: impl AsRef<Path>) -> Result<MultiChannelNetwork> {
    let (_, net) = read_network_file(path)?;
    Ok(net)
}

/// Reads a network file, keeping its optional `name` and `expected` fields.
pub fn read_network_file(path: impl AsRef<Path>) -> Result<(NetworkFile, MultiChannelNetwork)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: NetworkFile = serde_json::from_str(&text)?;
    let net = MultiChannelNetwork::from_file(&file)?;
    Ok((file, net))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> Result<MultiChannelNetwork> {
        let file: NetworkFile = serde_json::from_str(s)?;
        MultiChannelNetwork::from_file(&file)
    }

    #[test]
    fn parses_k2() {
        let net = parse_str(
            r#"{"num_nodes":2,"num_channels":1,"edges":{"shared":[[0,1]]},
                "rates":{"kind":"homogeneous","nu":2.0}}"#,
        )
        .unwrap();
        assert_eq!(net.num_nodes(), 2);
        assert_eq!(net.channel_graph(1).edges(), &[(0, 1)]);
        assert_eq!(net.rates().nu(), 2.0);
    }

    #[test]
    fn shared_c4_two_channels() {
        let net = parse_str(
            r#"{"num_nodes":4,"num_channels":2,
                "edges":{"shared":[[0,1],[1,2],[2,3],[3,0]]},
                "rates":{"kind":"homogeneous","nu":10}}"#,
        )
        .unwrap();
        assert_eq!(net.num_channels(), 2);
        assert!(net.is_shared());
        assert_eq!(net.channel_graph(1), net.channel_graph(2));
        assert_eq!(net.channel_graph(2).edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
    }

    #[test]
    fn per_channel_and_weights() {
        let net = parse_str(
            r#"{"num_nodes":3,"num_channels":2,
                "edges":{"per_channel":[[[0,1]],[[1,2]]]},
                "rates":{"kind":"heterogeneous_exponents","nu":5,
                         "weights":[[1,2],[1,1],[0.5,1]]}}"#,
        )
        .unwrap();
        assert!(!net.is_shared());
        assert_eq!(net.rates().exponent(0, 2), 2.0);
        assert!((net.rates().activation_rate(2, 1, 4.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn schema_violations() {
        let self_loop = r#"{"num_nodes":2,"num_channels":1,"edges":{"shared":[[0,0]]},
                            "rates":{"kind":"homogeneous","nu":2}}"#;
        assert!(matches!(parse_str(self_loop), Err(Error::Schema(_))));
        let mismatch = r#"{"num_nodes":2,"num_channels":2,"edges":{"per_channel":[[[0,1]]]},
                           "rates":{"kind":"homogeneous","nu":2}}"#;
        assert!(matches!(parse_str(mismatch), Err(Error::Schema(_))));
        let zero_c = r#"{"num_nodes":2,"num_channels":0,"edges":{"shared":[]},
                         "rates":{"kind":"homogeneous","nu":2}}"#;
        assert!(matches!(parse_str(zero_c), Err(Error::Schema(_))));
        let missing = r#"{"num_nodes":2,"edges":{"shared":[]},"rates":{"kind":"homogeneous","nu":2}}"#;
        assert!(matches!(parse_str(missing), Err(Error::Json(_))));
        let bad_weights = r#"{"num_nodes":2,"num_channels":1,"edges":{"shared":[]},
                              "rates":{"kind":"heterogeneous_exponents","nu":2,"weights":[[1]]}}"#;
        assert!(matches!(parse_str(bad_weights), Err(Error::Schema(_))));
        let bad_nu = r#"{"num_nodes":2,"num_channels":1,"edges":{"shared":[]},
                         "rates":{"kind":"homogeneous","nu":-1}}"#;
        assert!(matches!(parse_str(bad_nu), Err(Error::Schema(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            parse_network("/nonexistent/net.json"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let net = MultiChannelNetwork::shared(
            ConflictGraph::cycle(4).unwrap(),
            2,
            RateModel::homogeneous(3.0),
        )
        .unwrap();
        let text = serde_json::to_string(&net.to_file(Some("c4".into()))).unwrap();
        assert_eq!(parse_str(&text).unwrap(), net);
    }
}
