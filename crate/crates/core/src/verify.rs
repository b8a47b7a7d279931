//! Property checks over a corpus of network files.
//!
//! Each check returns `Ok(detail)` or `Err(reason)`. [`verify_corpus`] runs
//! every check on every instance and collects one [`CheckResult`] per pair.

use std::path::{Path, PathBuf};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    aggregate_throughput, conductance_bound, dominant_height_matrix, gamma, hitting_exponent,
    height_matrix, jain_index, log_stationary, starvation_indices, DEFAULT_NU_GRID,
};
use crate::conflict_graph::{
    chromatic_number_with_cap, disjoint_mis_count_with_cap, independence_number_with_cap,
    read_network_file, ConflictGraph, MultiChannelNetwork, NetworkFile, DEFAULT_NODE_CAP,
};
use crate::error::{Error, Result};
use crate::report::RunManifest;
use crate::state_space::{StateSpace, DEFAULT_STATE_CAP};
use crate::virtual_network::check_equivalence_with_cap;

pub type CheckOutcome = std::result::Result<String, String>;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Also load instances from the `figures` subdirectory.
    pub include_figures: bool,
    pub state_cap: usize,
    pub node_cap: usize,
    /// Largest space on which the exhaustive triple check runs.
    pub ultrametric_limit: usize,
    /// Largest space on which hitting-time exponents are fitted.
    pub hitting_limit: usize,
    pub nu_grid: Vec<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            include_figures: false,
            state_cap: DEFAULT_STATE_CAP,
            node_cap: DEFAULT_NODE_CAP,
            ultrametric_limit: 2000,
            hitting_limit: 1500,
            nu_grid: DEFAULT_NU_GRID.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub instance: String,
    pub check: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub manifest: RunManifest,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Values an instance file may pin down. Heights and indices that can be
/// undefined accept the string `"undefined"`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub state_count: Option<usize>,
    pub independence_number: Option<usize>,
    pub chromatic_number: Option<usize>,
    pub disjoint_mis_count: Option<usize>,
    pub max_activity: Option<usize>,
    pub dominant_count: Option<usize>,
    pub theta: Option<String>,
    pub jain: Option<String>,
    pub gamma: Option<NumberOrMarker>,
    pub upsilon: Option<NumberOrMarker>,
    /// Number of nodes whose starvation index is defined.
    pub upsilon_defined_nodes: Option<usize>,
    /// Heights between dominant states, compared up to relabelling.
    pub delta_matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NumberOrMarker {
    Number(f64),
    Marker(String),
}

impl NumberOrMarker {
    fn matches(&self, v: Option<f64>) -> bool {
        match (self, v) {
            (NumberOrMarker::Number(a), Some(b)) => *a == b,
            (NumberOrMarker::Marker(m), None) => m == "undefined",
            _ => false,
        }
    }
}

fn parse_ratio(s: &str) -> std::result::Result<Ratio<u64>, String> {
    let bad = || format!("'{s}' is not a rational like 4/3");
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse::<u64>().map_err(|_| bad())?);
            if b == 0 {
                return Err(bad());
            }
            Ok(Ratio::new(a, b))
        }
        None => Ok(Ratio::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

/// True when `b` equals `a` after relabelling rows and columns together.
pub fn same_up_to_relabel(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    fn extend(a: &[Vec<f64>], b: &[Vec<f64>], perm: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let k = perm.len();
        if k == a.len() {
            return true;
        }
        for cand in 0..a.len() {
            if used[cand] {
                continue;
            }
            let fits = (0..k).all(|j| a[k][j] == b[cand][perm[j]] && a[j][k] == b[perm[j]][cand])
                && a[k][k] == b[cand][cand];
            if fits {
                used[cand] = true;
                perm.push(cand);
                if extend(a, b, perm, used) {
                    return true;
                }
                perm.pop();
                used[cand] = false;
            }
        }
        false
    }
    a.len() == b.len()
        && a.iter().chain(b).all(|r| r.len() == a.len())
        && extend(a, b, &mut Vec::new(), &mut vec![false; a.len()])
}

// ---------------------------------------------------------------- oracles

fn naive_independent_sets(g: &ConflictGraph) -> Vec<u64> {
    (0u64..1 << g.num_nodes()).filter(|&s| g.is_independent(s)).collect()
}

fn naive_chromatic(g: &ConflictGraph) -> usize {
    let n = g.num_nodes();
    (1..=n)
        .find(|&k| {
            let mut colour = vec![0usize; n];
            loop {
                if g.edges().iter().all(|&(i, j)| colour[i] != colour[j]) {
                    return true;
                }
                // odometer over k^n colourings
                let mut p = 0;
                while p < n && colour[p] == k - 1 {
                    colour[p] = 0;
                    p += 1;
                }
                if p == n {
                    return false;
                }
                colour[p] += 1;
            }
        })
        .unwrap_or(n)
}

fn naive_packing(sets: &[u64], used: u64, from: usize) -> usize {
    (from..sets.len())
        .filter(|&k| sets[k] & used == 0)
        .map(|k| 1 + naive_packing(sets, used | sets[k], k + 1))
        .max()
        .unwrap_or(0)
}

/// Largest graph handed to the brute-force oracles.
pub const ORACLE_NODE_LIMIT: usize = 12;

/// Exact graph quantities against full enumeration.
pub fn check_graph_oracles(g: &ConflictGraph, node_cap: usize) -> CheckOutcome {
    if g.num_nodes() > ORACLE_NODE_LIMIT {
        return Ok(format!("skipped: more than {ORACLE_NODE_LIMIT} nodes"));
    }
    let err = |e: Error| e.to_string();
    let indep = naive_independent_sets(g);
    let alpha = indep.iter().map(|s| s.count_ones() as usize).max().unwrap_or(0);
    let maxsets: Vec<u64> = indep.iter().copied().filter(|s| s.count_ones() as usize == alpha).collect();
    let want = (alpha, naive_chromatic(g), naive_packing(&maxsets, 0, 0));
    let got = (
        independence_number_with_cap(g, node_cap).map_err(err)?,
        chromatic_number_with_cap(g, node_cap).map_err(err)?,
        disjoint_mis_count_with_cap(g, node_cap).map_err(err)?,
    );
    if got != want {
        return Err(format!("(alpha, chi, C*) = {got:?}, enumeration gives {want:?}"));
    }
    let n = g.num_nodes();
    if got.0 * got.1 < n || got.2 * got.0 > n {
        return Err(format!("graph invariants violated by {got:?}"));
    }
    Ok(format!("alpha={} chi={} C*={}", got.0, got.1, got.2))
}

/// Throughput characterization for `C = 1 ..= chi + 1`.
pub fn check_throughput_theorem(net: &MultiChannelNetwork, state_cap: usize, node_cap: usize) -> CheckOutcome {
    if !net.is_shared() || !net.rates().is_homogeneous() {
        return Ok("skipped: needs shared interference and homogeneous rates".into());
    }
    let err = |e: Error| e.to_string();
    let g = net.channel_graph(1);
    let n = g.num_nodes() as u64;
    let alpha = independence_number_with_cap(g, node_cap).map_err(err)? as u64;
    let chi = chromatic_number_with_cap(g, node_cap).map_err(err)?;
    let cstar = disjoint_mis_count_with_cap(g, node_cap).map_err(err)?;
    let mut prev: Option<Ratio<u64>> = None;
    let mut column = Vec::new();
    for c in 1..=chi + 1 {
        let space = StateSpace::enumerate_with_cap(&net.with_channels(c).map_err(err)?, state_cap).map_err(err)?;
        let theta = aggregate_throughput(&space).map_err(err)?;
        if theta != Ratio::new(space.max_activity() as u64, c as u64) {
            return Err(format!("C={c}: theta {theta} differs from A(C)/C"));
        }
        if c <= cstar && theta != Ratio::from_integer(alpha) {
            return Err(format!("C={c} <= C*={cstar}: theta {theta} != alpha {alpha}"));
        }
        if c >= chi && theta != Ratio::new(n, c as u64) {
            return Err(format!("C={c} >= chi={chi}: theta {theta} != N/C"));
        }
        if let Some(p) = prev {
            if theta > p {
                return Err(format!("theta rises from {p} to {theta} at C={c}"));
            }
        }
        prev = Some(theta);
        column.push(theta.to_string());
    }
    Ok(format!("theta = [{}]", column.join(", ")))
}

/// Virtual-graph equivalence for `C = 1, 2`.
pub fn check_virtual_equivalence(net: &MultiChannelNetwork, state_cap: usize) -> CheckOutcome {
    let mut detail = Vec::new();
    let nets: Vec<MultiChannelNetwork> = if net.is_shared() && net.rates().is_homogeneous() {
        (1..=2).map(|c| net.with_channels(c)).collect::<Result<_>>().map_err(|e| e.to_string())?
    } else {
        vec![net.clone()]
    };
    for n in nets {
        let r = check_equivalence_with_cap(&n, state_cap).map_err(|e| e.to_string())?;
        if !r.passed {
            return Err(format!(
                "C={}: {}",
                n.num_channels(),
                r.counterexample.unwrap_or_default()
            ));
        }
        detail.push(format!("C={}: {} states", n.num_channels(), r.virtual_states));
    }
    Ok(detail.join(", "))
}

/// Structural facts about the transition graph and the stationary law.
pub fn check_state_space(space: &StateSpace, nu: f64) -> CheckOutcome {
    let log_pi = log_stationary(space, nu).map_err(|e| e.to_string())?;
    let mut seen = vec![false; space.len()];
    let mut stack = vec![space.index_of(&vec![0; space.num_nodes()]).ok_or("empty state missing")?];
    seen[stack[0]] = true;
    while let Some(k) = stack.pop() {
        for t in space.transitions(k) {
            let j = t.target as usize;
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err("transition graph is not connected".into());
    }
    for k in 0..space.len() {
        for t in space.transitions(k) {
            let j = t.target as usize;
            if space.activity(k).abs_diff(space.activity(j)) != 1 {
                return Err(format!("move {k}->{j} does not change activity by one"));
            }
            let back = space
                .transitions(j)
                .iter()
                .find(|u| u.target as usize == k)
                .ok_or_else(|| format!("move {k}->{j} has no reverse"))?;
            let lhs = log_pi[k] + space.rate(t, nu).ln();
            let rhs = log_pi[j] + space.rate(back, nu).ln();
            if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(1.0) {
                return Err(format!("detailed balance fails on {k}<->{j}"));
            }
        }
    }
    let chain = space.uniformized_matrix(nu).map_err(|e| e.to_string())?;
    for k in 0..space.len() {
        let sum: f64 = chain.row(k).map(|(_, p)| p).sum::<f64>() + chain.self_loop(k);
        if (sum - 1.0).abs() > 1e-12 || chain.self_loop(k) < -1e-15 {
            return Err(format!("uniformized row {k} sums to {sum}"));
        }
    }
    Ok(format!("{} states, {} moves", space.len(), space.num_transitions()))
}

/// Exhaustive ultrametric check of the communication height over all
/// states. Heights are mapped to small ranks so the inner loop vectorizes.
pub fn check_ultrametric(space: &StateSpace) -> CheckOutcome {
    let n = space.len();
    let all: Vec<usize> = (0..n).collect();
    let h = height_matrix(space, &all);
    let mut levels: Vec<f64> = h.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() > 255 {
        return Err("too many distinct heights".into());
    }
    let rank: Vec<Vec<u8>> = h
        .iter()
        .map(|row| row.iter().map(|v| levels.binary_search_by(|l| l.total_cmp(v)).unwrap() as u8).collect())
        .collect();
    for x in 0..n {
        if h[x][x] != 0.0 {
            return Err(format!("height of state {x} to itself is {}", h[x][x]));
        }
        for y in 0..n {
            if h[x][y] != h[y][x] {
                return Err(format!("asymmetric heights between {x} and {y}"));
            }
            if x != y && !(h[x][y] > 0.0) {
                return Err(format!("zero height between distinct states {x} and {y}"));
            }
        }
    }
    for x in 0..n {
        let rx = &rank[x];
        for y in x + 1..n {
            let ry = &rank[y];
            let worst = rx.iter().zip(ry).map(|(a, b)| *a.max(b)).min().unwrap_or(0);
            if worst < rx[y] {
                let z = (0..n).find(|&z| rx[z].max(ry[z]) < rx[y]).unwrap();
                return Err(format!("ultrametric inequality fails for ({x}, {y}) via {z}"));
            }
        }
    }
    Ok(format!("{n} states, {} triples", (n * (n - 1) / 2) as u128 * n as u128))
}

pub fn check_starvation_order(space: &StateSpace) -> CheckOutcome {
    let st = starvation_indices(space);
    match (st.network, gamma(space)) {
        (Some(u), Some(g)) if u <= g => Ok(format!("upsilon={u} gamma={g}")),
        (Some(u), Some(g)) => Err(format!("upsilon {u} exceeds gamma {g}")),
        (u, g) => Ok(format!("not both defined (upsilon={u:?}, gamma={g:?})")),
    }
}

/// Fitted exponent of `E tau(s, D \ {s})` against `Delta(s, D \ {s}) - 1`.
pub fn check_hitting_exponents(space: &StateSpace, nu_grid: &[f64], tolerance: f64) -> CheckOutcome {
    let dom = space.dominant();
    if dom.len() < 2 {
        return Ok("single dominant state".into());
    }
    let mut worst: f64 = 0.0;
    for &s in dom {
        let rest: Vec<usize> = dom.iter().copied().filter(|&k| k != s).collect();
        let e = hitting_exponent(space, s, &rest, nu_grid).map_err(|e| e.to_string())?;
        let predicted = e.predicted.ok_or("no predicted exponent")?;
        let gap = (e.fit.slope - predicted).abs();
        if gap > tolerance {
            return Err(format!(
                "from {}: slope {:.4} vs predicted {predicted}",
                space.activity_state(s),
                e.fit.slope
            ));
        }
        worst = worst.max(gap);
    }
    Ok(format!("{} dominant starts, worst gap {worst:.4}", dom.len()))
}

pub fn check_mixing_boundary(space: &StateSpace, nu_grid: &[f64]) -> CheckOutcome {
    match conductance_bound(space, nu_grid, 0.25).map_err(|e| e.to_string())? {
        None => Ok("single dominant state".into()),
        Some(m) if m.boundary_ok => Ok(format!(
            "set of {} states, conductance slope {:.4}",
            m.set_size, m.conductance_exponent.slope
        )),
        Some(m) => Err(format!("boundary levels {:?}, expected A - Gamma + 1", m.boundary_levels)),
    }
}

pub fn check_expected(expected: &Expected, net: &MultiChannelNetwork, space: &StateSpace, node_cap: usize) -> CheckOutcome {
    let mut bad = Vec::new();
    let mut good = 0;
    let mut cmp = |what: &str, ok: bool, got: String| {
        if ok {
            good += 1;
        } else {
            bad.push(format!("{what}: got {got}"));
        }
    };
    if let Some(v) = expected.state_count {
        cmp("state_count", v == space.len(), space.len().to_string());
    }
    if net.is_shared() {
        let g = net.channel_graph(1);
        let err = |e: Error| e.to_string();
        if let Some(v) = expected.independence_number {
            let a = independence_number_with_cap(g, node_cap).map_err(err)?;
            cmp("independence_number", v == a, a.to_string());
        }
        if let Some(v) = expected.chromatic_number {
            let a = chromatic_number_with_cap(g, node_cap).map_err(err)?;
            cmp("chromatic_number", v == a, a.to_string());
        }
        if let Some(v) = expected.disjoint_mis_count {
            let a = disjoint_mis_count_with_cap(g, node_cap).map_err(err)?;
            cmp("disjoint_mis_count", v == a, a.to_string());
        }
    }
    if let Some(v) = expected.max_activity {
        cmp("max_activity", v == space.max_activity(), space.max_activity().to_string());
    }
    if let Some(v) = expected.dominant_count {
        cmp("dominant_count", v == space.dominant().len(), space.dominant().len().to_string());
    }
    if let Some(v) = &expected.theta {
        let want = parse_ratio(v)?;
        let got = aggregate_throughput(space).map_err(|e| e.to_string())?;
        cmp("theta", want == got, got.to_string());
    }
    if let Some(v) = &expected.jain {
        let got = jain_index(space);
        let ok = if v == "undefined" { got.is_none() } else { got == Some(parse_ratio(v)?) };
        cmp("jain", ok, format!("{got:?}"));
    }
    let st = starvation_indices(space);
    if let Some(v) = &expected.gamma {
        let got = gamma(space);
        cmp("gamma", v.matches(got), format!("{got:?}"));
    }
    if let Some(v) = &expected.upsilon {
        cmp("upsilon", v.matches(st.network), format!("{:?}", st.network));
    }
    if let Some(v) = expected.upsilon_defined_nodes {
        let got = st.per_node.iter().filter(|s| s.index().is_some()).count();
        cmp("upsilon_defined_nodes", v == got, got.to_string());
    }
    if let Some(m) = &expected.delta_matrix {
        let got = dominant_height_matrix(space);
        cmp("delta_matrix", same_up_to_relabel(m, &got), format!("{got:?}"));
    }
    if bad.is_empty() {
        Ok(format!("{good} expected values match"))
    } else {
        Err(bad.join("; "))
    }
}

// ---------------------------------------------------------------- driver

/// A corpus instance with its source path.
pub struct Instance {
    pub name: String,
    pub path: PathBuf,
    pub file: NetworkFile,
    pub net: MultiChannelNetwork,
    pub figure: bool,
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

pub fn load_corpus(dir: &Path, include_figures: bool) -> Result<Vec<Instance>> {
    let mut paths: Vec<(PathBuf, bool)> = json_files(dir)?.into_iter().map(|p| (p, false)).collect();
    let figures = dir.join("figures");
    if include_figures && figures.is_dir() {
        paths.extend(json_files(&figures)?.into_iter().map(|p| (p, true)));
    }
    paths
        .into_iter()
        .map(|(path, figure)| {
            let (file, net) = read_network_file(&path)?;
            let name = file
                .name
                .clone()
                .unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned());
            Ok(Instance {
                name,
                path,
                file,
                net,
                figure,
            })
        })
        .collect()
}

pub fn verify_instance(inst: &Instance, opts: &VerifyOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut push = |check: &str, r: CheckOutcome| {
        let (status, detail) = match r {
            Ok(d) if d.starts_with("skipped") => (Status::Skip, d),
            Ok(d) => (Status::Pass, d),
            Err(d) => (Status::Fail, d),
        };
        out.push(CheckResult {
            instance: inst.name.clone(),
            check: check.to_string(),
            status,
            detail,
        });
    };
    if inst.net.is_shared() {
        push("graph_oracles", check_graph_oracles(inst.net.channel_graph(1), opts.node_cap));
    }
    push("throughput_theorem", check_throughput_theorem(&inst.net, opts.state_cap, opts.node_cap));
    push("virtual_equivalence", check_virtual_equivalence(&inst.net, opts.state_cap));
    let space = match StateSpace::enumerate_with_cap(&inst.net, opts.state_cap) {
        Ok(s) => s,
        Err(e) => {
            push("enumerate", Err(e.to_string()));
            return out;
        }
    };
    push("state_space", check_state_space(&space, inst.net.rates().nu()));
    push(
        "ultrametric",
        if space.len() <= opts.ultrametric_limit {
            check_ultrametric(&space)
        } else {
            Ok(format!("skipped: {} states", space.len()))
        },
    );
    push("starvation_order", check_starvation_order(&space));
    push(
        "hitting_exponents",
        if space.len() <= opts.hitting_limit {
            check_hitting_exponents(&space, &opts.nu_grid, 0.15)
        } else {
            Ok(format!("skipped: {} states", space.len()))
        },
    );
    push("mixing_boundary", check_mixing_boundary(&space, &opts.nu_grid));
    if let Some(v) = &inst.file.expected {
        let r = serde_json::from_value::<Expected>(v.clone())
            .map_err(|e| format!("malformed expected block: {e}"))
            .and_then(|exp| check_expected(&exp, &inst.net, &space, opts.node_cap));
        push("expected_values", r);
    }
    out
}

pub fn verify_corpus(dir: &Path, opts: &VerifyOptions, manifest: RunManifest) -> Result<VerifyReport> {
    let instances = load_corpus(dir, opts.include_figures)?;
    if instances.is_empty() {
        return Err(Error::invalid(format!("no instances in {}", dir.display())));
    }
    let checks: Vec<CheckResult> = instances.iter().flat_map(|i| verify_instance(i, opts)).collect();
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    Ok(VerifyReport {
        manifest,
        instances: instances.len(),
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        skipped: count(Status::Skip),
        checks,
    })
}
