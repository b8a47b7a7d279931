//! Report assembly and run manifests shared by the CLI and the C interface.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    aggregate_throughput, asymptotic_node_throughput, conductance_bound, dominant_height_matrix,
    gamma, hitting_exponent, jain_index, starvation_indices, ExponentFit, Height, HittingExponent,
    Marker, NodeStarvation, RationalValue, DEFAULT_NU_GRID,
};
use crate::conflict_graph::{
    chromatic_number_with_cap, disjoint_mis_count_with_cap, independence_number_with_cap,
    MultiChannelNetwork, RateModel, DEFAULT_NODE_CAP,
};
use crate::error::{Error, Result};
use crate::state_space::{ActivityState, StateSpace};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Spaces above this size skip the hitting-time table in `analyze`.
pub const REPORT_HITTING_LIMIT: usize = 2000;

/// Provenance of a report: identical manifests give identical reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub input_digest: Option<String>,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, input: Option<&[u8]>, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config,
            input_digest: input.map(digest),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            timestamp: timestamp(),
        }
    }

    /// `# key: value` lines for CSV side tables.
    pub fn csv_header(&self) -> String {
        let mut out = format!("# command: {}\n# tool_version: {}\n", self.command, self.tool_version);
        if let Some(d) = &self.input_digest {
            out += &format!("# input_digest: {d}\n");
        }
        if let Some(s) = self.seed {
            out += &format!("# seed: {s}\n");
        }
        out += &format!("# config: {}\n# timestamp: {}\n", self.config, self.timestamp);
        out
    }
}

pub fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// RFC 3339 time, pinned by `SOURCE_DATE_EPOCH` when set.
pub fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0));
    pinned
        .unwrap_or_else(chrono::Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphSummary {
    pub independence_number: usize,
    pub chromatic_number: usize,
    pub disjoint_mis_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub name: Option<String>,
    pub num_nodes: usize,
    pub num_channels: usize,
    pub shared_interference: bool,
    pub rates: RateModel,
    /// Classical quantities of the shared conflict graph.
    pub graph: Option<GraphSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub manifest: RunManifest,
    pub network: NetworkSummary,
    pub state_count: usize,
    /// Largest number of simultaneously active nodes.
    pub max_activity: usize,
    /// Largest weighted activity; equals `max_activity` for homogeneous rates.
    pub max_level: Height,
    pub dominant_count: usize,
    pub dominant_states: Vec<ActivityState>,
    pub theta: Marker<RationalValue>,
    pub theta_per_node: Vec<RationalValue>,
    pub jain: Marker<RationalValue>,
    pub delta_matrix: Vec<Vec<Height>>,
    pub upsilon_per_node: Vec<NodeStarvation>,
    pub upsilon: Marker<Height>,
    pub gamma: Marker<Height>,
    pub conductance_exponent: Marker<f64>,
    pub hitting: Option<HittingExponent>,
}

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub nu_grid: Vec<f64>,
    pub epsilon: f64,
    pub node_cap: usize,
    pub state_cap: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            nu_grid: DEFAULT_NU_GRID.to_vec(),
            epsilon: 0.25,
            node_cap: DEFAULT_NODE_CAP,
            state_cap: crate::state_space::DEFAULT_STATE_CAP,
        }
    }
}

pub fn graph_summary(net: &MultiChannelNetwork, node_cap: usize) -> Result<Option<GraphSummary>> {
    if !net.is_shared() {
        return Ok(None);
    }
    let g = net.channel_graph(1);
    Ok(Some(GraphSummary {
        independence_number: independence_number_with_cap(g, node_cap)?,
        chromatic_number: chromatic_number_with_cap(g, node_cap)?,
        disjoint_mis_count: disjoint_mis_count_with_cap(g, node_cap)?,
    }))
}

pub fn analyze(
    net: &MultiChannelNetwork,
    name: Option<String>,
    opts: &AnalyzeOptions,
    manifest: RunManifest,
) -> Result<AnalysisReport> {
    let space = StateSpace::enumerate_with_cap(net, opts.state_cap)?;
    analyze_space(net, &space, name, opts, manifest)
}

pub fn analyze_space(
    net: &MultiChannelNetwork,
    space: &StateSpace,
    name: Option<String>,
    opts: &AnalyzeOptions,
    manifest: RunManifest,
) -> Result<AnalysisReport> {
    let theta = match aggregate_throughput(space) {
        Ok(r) => Marker::Value(r.into()),
        Err(Error::Unsupported(_)) => Marker::Undefined,
        Err(e) => return Err(e),
    };
    let heights = dominant_height_matrix(space);
    let starvation = starvation_indices(space);
    let conductance_exponent = match conductance_bound(space, &opts.nu_grid, opts.epsilon)? {
        Some(m) => Marker::Value(m.conductance_exponent.slope),
        None => Marker::Undefined,
    };
    let dom = space.dominant();
    let hitting = if dom.len() >= 2 && space.len() <= REPORT_HITTING_LIMIT {
        Some(hitting_exponent(space, dom[0], &dom[1..], &opts.nu_grid)?)
    } else {
        None
    };
    Ok(AnalysisReport {
        manifest,
        network: NetworkSummary {
            name,
            num_nodes: net.num_nodes(),
            num_channels: net.num_channels(),
            shared_interference: net.is_shared(),
            rates: net.rates().clone(),
            graph: graph_summary(net, opts.node_cap)?,
        },
        state_count: space.len(),
        max_activity: space.max_activity(),
        max_level: Height(space.max_level()),
        dominant_count: dom.len(),
        dominant_states: space.dominant_states(),
        theta,
        theta_per_node: asymptotic_node_throughput(space).into_iter().map(Into::into).collect(),
        jain: jain_index(space).map(RationalValue::from).into(),
        delta_matrix: heights
            .iter()
            .map(|row| row.iter().map(|&h| Height(h)).collect())
            .collect(),
        upsilon_per_node: starvation.per_node,
        upsilon: starvation.network.map(Height).into(),
        gamma: gamma(space).map(Height).into(),
        conductance_exponent,
        hitting,
    })
}

/// One row of a channel sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub channels: usize,
    pub state_count: usize,
    pub max_activity: usize,
    pub theta: RationalValue,
    pub jain: Marker<RationalValue>,
    pub upsilon: Marker<Height>,
    pub gamma: Marker<Height>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub manifest: RunManifest,
    pub rows: Vec<SweepRow>,
    /// Channel counts `C` where throughput rose from `C - 1`; always a defect.
    pub theta_violations: Vec<usize>,
    /// Channel counts where fairness dropped, which can legitimately happen.
    pub jain_decreases: Vec<usize>,
    /// Channel counts where the starvation index grew.
    pub upsilon_increases: Vec<usize>,
}

pub fn sweep_channels(
    net: &MultiChannelNetwork,
    c_max: usize,
    state_cap: usize,
    manifest: RunManifest,
) -> Result<SweepReport> {
    if c_max == 0 {
        return Err(Error::invalid("c_max must be at least 1"));
    }
    let mut rows = Vec::with_capacity(c_max);
    let mut raw = Vec::with_capacity(c_max);
    for c in 1..=c_max {
        let net_c = net.with_channels(c)?;
        let space = StateSpace::enumerate_with_cap(&net_c, state_cap)?;
        let theta = aggregate_throughput(&space)?;
        let jain = jain_index(&space);
        let upsilon = starvation_indices(&space).network;
        raw.push((theta, jain, upsilon));
        rows.push(SweepRow {
            channels: c,
            state_count: space.len(),
            max_activity: space.max_activity(),
            theta: theta.into(),
            jain: jain.map(RationalValue::from).into(),
            upsilon: upsilon.map(Height).into(),
            gamma: gamma(&space).map(Height).into(),
        });
    }
    let mut report = SweepReport {
        manifest,
        rows,
        theta_violations: Vec::new(),
        jain_decreases: Vec::new(),
        upsilon_increases: Vec::new(),
    };
    for c in 1..raw.len() {
        let (prev, cur) = (&raw[c - 1], &raw[c]);
        if cur.0 > prev.0 {
            report.theta_violations.push(c + 1);
        }
        if let (Some(a), Some(b)) = (prev.1, cur.1) {
            if b < a {
                report.jain_decreases.push(c + 1);
            }
        }
        if let (Some(a), Some(b)) = (prev.2, cur.2) {
            if b > a {
                report.upsilon_increases.push(c + 1);
            }
        }
    }
    Ok(report)
}

/// CSV side table with `nu,value,log_nu_value` columns.
pub fn fit_csv(manifest: &RunManifest, fit: &ExponentFit) -> String {
    let mut out = manifest.csv_header();
    out += &format!("# slope: {}\n", fit.slope);
    out += "nu,value,log_nu_value\n";
    for p in &fit.points {
        out += &format!("{},{},{}\n", p.nu, p.value, p.log_nu_value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflict_graph::ConflictGraph;

    fn manifest() -> RunManifest {
        RunManifest {
            command: "analyze".into(),
            config: serde_json::json!({}),
            input_digest: None,
            tool_version: TOOL_VERSION.into(),
            seed: None,
            timestamp: "1970-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn c4_report() {
        let net = MultiChannelNetwork::shared(ConflictGraph::cycle(4).unwrap(), 1, RateModel::homogeneous(10.0))
            .unwrap();
        let r = analyze(&net, None, &AnalyzeOptions::default(), manifest()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["theta"]["exact"], "2");
        assert_eq!(v["gamma"], 2);
        assert_eq!(v["upsilon"], 2);
        assert_eq!(v["delta_matrix"], serde_json::json!([[0, 2], [2, 0]]));
        assert_eq!(v["network"]["graph"]["chromatic_number"], 2);
        let slope = r.conductance_exponent.value().copied().unwrap();
        assert!((slope + 1.0).abs() < 0.15);
    }

    #[test]
    fn p3_report_markers() {
        let net = MultiChannelNetwork::shared(ConflictGraph::path(3).unwrap(), 1, RateModel::homogeneous(10.0))
            .unwrap();
        let v = serde_json::to_value(analyze(&net, None, &AnalyzeOptions::default(), manifest()).unwrap()).unwrap();
        assert_eq!(v["upsilon"], "undefined");
        assert_eq!(v["gamma"], "undefined");
        assert_eq!(v["upsilon_per_node"][1], "permanent-starver");
        assert_eq!(v["conductance_exponent"], "undefined");
    }

    #[test]
    fn sweep_c4() {
        let net = MultiChannelNetwork::shared(ConflictGraph::cycle(4).unwrap(), 1, RateModel::homogeneous(10.0))
            .unwrap();
        let s = sweep_channels(&net, 3, 1_000_000, manifest()).unwrap();
        let thetas: Vec<&str> = s.rows.iter().map(|r| r.theta.exact.as_str()).collect();
        assert_eq!(thetas, ["2", "2", "4/3"]);
        assert!(s.theta_violations.is_empty());
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            digest(b"abc"),
            "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn pinned_timestamp() {
        // Only checks the format; the variable is process-wide.
        let t = timestamp();
        assert!(t.ends_with('Z') && t.len() == 20, "{t}");
    }
}
