//! Stochastic simulation of the activity process.
//!
//! Two engines are available. `CtmcExact` samples the jump chain of the
//! Markov process from the enumerated rate table. `EventDriven` keeps one
//! back-off timer per (node, channel) and one transmission timer per active
//! node, so back-off and transmission lengths may follow any unit-mean law.
//! A back-off that expires while its channel is blocked is redrawn; all
//! back-offs of a node are redrawn when its transmission ends.
//!
//! Replica `r` draws from a ChaCha8 stream keyed by `(seed, r)`, so results
//! do not depend on how replicas are scheduled across threads.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::stationary_distribution;
use crate::conflict_graph::MultiChannelNetwork;
use crate::error::{Error, Result};
use crate::state_space::{ActivityState, StateSpace};

/// Unit-mean timer law, scaled by the mean of the timer it drives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimerDist {
    Exponential,
    Deterministic,
    /// Uniform on `[a, b]`, rescaled to mean one.
    Uniform { a: f64, b: f64 },
}

impl TimerDist {
    fn validate(&self) -> Result<()> {
        if let TimerDist::Uniform { a, b } = *self {
            if !(a >= 0.0 && b > a && b.is_finite()) {
                return Err(Error::invalid(format!("uniform timer needs 0 <= a < b, got ({a}, {b})")));
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            // 1 - U lies in (0, 1], so the log is finite
            TimerDist::Exponential => -(1.0 - rng.random::<f64>()).ln(),
            TimerDist::Deterministic => 1.0,
            TimerDist::Uniform { a, b } => (a + (b - a) * rng.random::<f64>()) * 2.0 / (a + b),
        }
    }
}

impl FromStr for TimerDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d = match s {
            "exp" | "exponential" => TimerDist::Exponential,
            "det" | "deterministic" => TimerDist::Deterministic,
            _ => {
                let body = s
                    .strip_prefix("unif:")
                    .ok_or_else(|| Error::invalid(format!("unknown distribution '{s}' (exp, det, unif:a,b)")))?;
                let (a, b) = body
                    .split_once(',')
                    .ok_or_else(|| Error::invalid(format!("expected unif:a,b, got '{s}'")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("bad number '{v}' in '{s}'")))
                };
                TimerDist::Uniform { a: parse(a)?, b: parse(b)? }
            }
        };
        d.validate()?;
        Ok(d)
    }
}

impl fmt::Display for TimerDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimerDist::Exponential => write!(f, "exp"),
            TimerDist::Deterministic => write!(f, "det"),
            TimerDist::Uniform { a, b } => write!(f, "unif:{a},{b}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    CtmcExact,
    EventDriven,
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "ctmc-exact" => Ok(SimMode::CtmcExact),
            "event" | "event-driven" => Ok(SimMode::EventDriven),
            _ => Err(Error::invalid(format!("unknown mode '{s}' (exact, event)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replicas: usize,
    /// Simulated time per replica.
    pub horizon: f64,
    /// Event budget per replica.
    pub max_events: u64,
    pub backoff: TimerDist,
    pub transmit: TimerDist,
    pub mode: SimMode,
    /// Keep a per-replica event log.
    pub record_events: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            replicas: 1,
            horizon: 1e4,
            max_events: 100_000_000,
            backoff: TimerDist::Exponential,
            transmit: TimerDist::Exponential,
            mode: SimMode::CtmcExact,
            record_events: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::invalid("replicas must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon must be positive and finite"));
        }
        if self.max_events == 0 {
            return Err(Error::invalid("event cap must be positive"));
        }
        self.backoff.validate()?;
        self.transmit.validate()?;
        if self.mode == SimMode::CtmcExact
            && (self.backoff != TimerDist::Exponential || self.transmit != TimerDist::Exponential)
        {
            return Err(Error::invalid("ctmc-exact mode requires exponential timers"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub replica: usize,
    pub time: f64,
    pub node: usize,
    pub channel: usize,
    pub activate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub replicas: usize,
    pub total_time: f64,
    pub events: u64,
    /// Replicas that ran out of events before the horizon.
    pub truncated_replicas: usize,
    /// Fraction of time each node spends active.
    pub node_active_fraction: Vec<f64>,
    /// `[node][channel - 1]` fraction of time spent on each channel.
    pub node_channel_fraction: Vec<Vec<f64>>,
    /// Mean number of nodes active on each channel.
    pub channel_occupancy: Vec<f64>,
    /// Time-weighted state occupancy in state-space order.
    pub state_occupancy: Vec<f64>,
    /// Standard error of each occupancy across replicas (needs two or more).
    pub state_occupancy_stderr: Option<Vec<f64>>,
    /// Jumps taken along each transition, `[state][transition]`.
    pub jump_counts: Vec<Vec<u64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub event_log: Vec<EventRecord>,
}

/// Per-replica accumulator.
struct Tally {
    time: f64,
    events: u64,
    truncated: bool,
    occupancy: Vec<f64>,
    jumps: Vec<Vec<u64>>,
    log: Vec<EventRecord>,
}

impl Tally {
    fn new(space: &StateSpace) -> Self {
        Self {
            time: 0.0,
            events: 0,
            truncated: false,
            occupancy: vec![0.0; space.len()],
            jumps: (0..space.len()).map(|k| vec![0; space.transitions(k).len()]).collect(),
            log: Vec::new(),
        }
    }
}

fn rng_for(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

fn warn_large_nu(nu: f64) {
    if nu >= 1e4 {
        log::warn!(
            "nu = {nu:e}: simulated hitting times with exponent above 2 are impractical; use the exact solver"
        );
    }
}

/// Where a run stops.
enum Stop<'a> {
    Horizon(f64),
    Target(&'a [bool]),
}

/// Gillespie run from state `start`; returns the stopping time.
fn run_ctmc(
    space: &StateSpace,
    rates: &[Vec<f64>],
    exit: &[f64],
    start: usize,
    stop: Stop<'_>,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
    tally: &mut Tally,
    replica: usize,
) -> f64 {
    let mut k = start;
    let mut t = 0.0;
    loop {
        if let Stop::Target(mask) = stop {
            if mask[k] {
                return t;
            }
        }
        if tally.events >= cfg.max_events {
            tally.truncated = true;
            return t;
        }
        let hold = -(1.0 - rng.random::<f64>()).ln() / exit[k];
        if let Stop::Horizon(h) = stop {
            if t + hold >= h {
                tally.occupancy[k] += h - t;
                return h;
            }
        }
        tally.occupancy[k] += hold;
        t += hold;
        let mut u = rng.random::<f64>() * exit[k];
        let row = &rates[k];
        let mut pick = row.len() - 1;
        for (m, &r) in row.iter().enumerate() {
            if u < r {
                pick = m;
                break;
            }
            u -= r;
        }
        let tr = space.transitions(k)[pick];
        tally.jumps[k][pick] += 1;
        tally.events += 1;
        if cfg.record_events {
            tally.log.push(EventRecord {
                replica,
                time: t,
                node: tr.node as usize,
                channel: tr.channel as usize,
                activate: tr.activate,
            });
        }
        k = tr.target as usize;
    }
}

/// Timer-based run from state `start`; returns the stopping time.
#[allow(clippy::too_many_arguments)]
fn run_events(
    net: &MultiChannelNetwork,
    space: &StateSpace,
    nu: f64,
    start: usize,
    stop: Stop<'_>,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
    tally: &mut Tally,
    replica: usize,
) -> f64 {
    let (n, c) = (net.num_nodes(), net.num_channels());
    let mean_backoff: Vec<f64> = (0..n * c)
        .map(|v| 1.0 / net.rates().activation_rate(v / c, v % c + 1, nu))
        .collect();
    let conflicts: Vec<Vec<u64>> = (1..=c).map(|ch| net.channel_graph(ch).adjacency().to_vec()).collect();
    let mut x = space.state(start).to_vec();
    let mut on = vec![0u64; c + 1];
    let mut backoff = vec![f64::INFINITY; n * c];
    let mut tx_end = vec![f64::INFINITY; n];
    for i in 0..n {
        if x[i] != 0 {
            on[x[i] as usize] |= 1 << i;
            tx_end[i] = cfg.transmit.sample(rng);
        } else {
            for ch in 0..c {
                backoff[i * c + ch] = cfg.backoff.sample(rng) * mean_backoff[i * c + ch];
            }
        }
    }
    let mut k = start;
    let mut t = 0.0;
    loop {
        if let Stop::Target(mask) = stop {
            if mask[k] {
                return t;
            }
        }
        if tally.events >= cfg.max_events {
            tally.truncated = true;
            return t;
        }
        // earliest timer; ties go to the lowest index
        let (mut next, mut which) = (f64::INFINITY, usize::MAX);
        for (v, &b) in backoff.iter().enumerate() {
            if b < next {
                (next, which) = (b, v);
            }
        }
        for (i, &e) in tx_end.iter().enumerate() {
            if e < next {
                (next, which) = (e, n * c + i);
            }
        }
        if let Stop::Horizon(h) = stop {
            if next >= h {
                tally.occupancy[k] += h - t;
                return h;
            }
        }
        tally.occupancy[k] += next - t;
        t = next;
        let (node, channel, activate) = if which < n * c {
            let (i, ch) = (which / c, which % c + 1);
            if conflicts[ch - 1][i] & on[ch] != 0 {
                backoff[which] = t + cfg.backoff.sample(rng) * mean_backoff[which];
                continue;
            }
            x[i] = ch as u8;
            on[ch] |= 1 << i;
            for v in i * c..(i + 1) * c {
                backoff[v] = f64::INFINITY;
            }
            tx_end[i] = t + cfg.transmit.sample(rng);
            (i, ch, true)
        } else {
            let i = which - n * c;
            let ch = x[i] as usize;
            x[i] = 0;
            on[ch] &= !(1 << i);
            tx_end[i] = f64::INFINITY;
            for v in i * c..(i + 1) * c {
                backoff[v] = t + cfg.backoff.sample(rng) * mean_backoff[v];
            }
            (i, ch, false)
        };
        let target = space.index_of(&x).expect("timer moves stay feasible");
        if let Some(m) = space.transitions(k).iter().position(|tr| tr.target as usize == target) {
            tally.jumps[k][m] += 1;
        }
        tally.events += 1;
        if cfg.record_events {
            tally.log.push(EventRecord {
                replica,
                time: t,
                node,
                channel,
                activate,
            });
        }
        k = target;
    }
}

fn rate_table(space: &StateSpace, nu: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rates: Vec<Vec<f64>> = (0..space.len())
        .map(|k| space.transitions(k).iter().map(|t| space.rate(t, nu)).collect())
        .collect();
    let exit = rates.iter().map(|r| r.iter().sum()).collect();
    (rates, exit)
}

fn check_space(net: &MultiChannelNetwork, space: &StateSpace) -> Result<()> {
    if space.num_nodes() != net.num_nodes() || space.num_channels() != net.num_channels() {
        return Err(Error::invalid("state space does not belong to this network"));
    }
    Ok(())
}

/// Long-run statistics from the empty state over `config.horizon` per replica.
pub fn simulate(net: &MultiChannelNetwork, space: Option<&StateSpace>, config: &SimConfig) -> Result<TrajectoryStats> {
    config.validate()?;
    let owned;
    let space = match space {
        Some(s) => {
            check_space(net, s)?;
            s
        }
        None => {
            owned = StateSpace::enumerate(net)?;
            &owned
        }
    };
    let nu = net.rates().nu();
    warn_large_nu(nu);
    let start = space.index_of(&vec![0; net.num_nodes()]).expect("empty state is feasible");
    let table = (config.mode == SimMode::CtmcExact).then(|| rate_table(space, nu));
    let tallies: Vec<Tally> = (0..config.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(config.seed, r);
            let mut tally = Tally::new(space);
            let stop = Stop::Horizon(config.horizon);
            tally.time = match &table {
                Some((rates, exit)) => run_ctmc(space, rates, exit, start, stop, config, &mut rng, &mut tally, r),
                None => run_events(net, space, nu, start, stop, config, &mut rng, &mut tally, r),
            };
            tally
        })
        .collect();
    if tallies.iter().all(|t| t.events == 0) {
        return Err(Error::Simulation("horizon too small to produce any event".into()));
    }
    Ok(aggregate(space, tallies))
}

fn aggregate(space: &StateSpace, tallies: Vec<Tally>) -> TrajectoryStats {
    let (n, c) = (space.num_nodes(), space.num_channels());
    let replicas = tallies.len();
    let total_time: f64 = tallies.iter().map(|t| t.time).sum();
    let mut state_occupancy = vec![0.0; space.len()];
    let mut jump_counts: Vec<Vec<u64>> = (0..space.len()).map(|k| vec![0; space.transitions(k).len()]).collect();
    let mut event_log = Vec::new();
    let mut events = 0;
    let mut truncated_replicas = 0;
    let per_replica: Vec<Vec<f64>> = tallies
        .iter()
        .map(|t| t.occupancy.iter().map(|v| v / t.time).collect())
        .collect();
    for t in tallies {
        for (acc, v) in state_occupancy.iter_mut().zip(&t.occupancy) {
            *acc += v;
        }
        for (acc, row) in jump_counts.iter_mut().zip(&t.jumps) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        events += t.events;
        truncated_replicas += t.truncated as usize;
        event_log.extend(t.log);
    }
    for v in &mut state_occupancy {
        *v /= total_time;
    }
    let state_occupancy_stderr = (replicas >= 2).then(|| {
        (0..space.len())
            .map(|k| {
                let mean = per_replica.iter().map(|p| p[k]).sum::<f64>() / replicas as f64;
                let var = per_replica.iter().map(|p| (p[k] - mean).powi(2)).sum::<f64>() / (replicas - 1) as f64;
                (var / replicas as f64).sqrt()
            })
            .collect()
    });
    let mut node_channel_fraction = vec![vec![0.0; c]; n];
    for (k, &p) in state_occupancy.iter().enumerate() {
        for (i, &v) in space.state(k).iter().enumerate() {
            if v != 0 {
                node_channel_fraction[i][v as usize - 1] += p;
            }
        }
    }
    let node_active_fraction = node_channel_fraction.iter().map(|r| r.iter().sum()).collect();
    let channel_occupancy = (0..c).map(|ch| node_channel_fraction.iter().map(|r| r[ch]).sum()).collect();
    TrajectoryStats {
        replicas,
        total_time,
        events,
        truncated_replicas,
        node_active_fraction,
        node_channel_fraction,
        channel_occupancy,
        state_occupancy,
        state_occupancy_stderr,
        jump_counts,
        event_log,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingEstimate {
    pub nu: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: Vec<f64>,
}

/// Monte Carlo estimate of the time to enter `target` from `start`, one
/// sample per replica. Replicas that exhaust the event cap are an error.
pub fn estimate_hitting(
    net: &MultiChannelNetwork,
    start: &ActivityState,
    target: &[ActivityState],
    nu: f64,
    config: &SimConfig,
) -> Result<HittingEstimate> {
    config.validate()?;
    let net = net.with_rates(net.rates().with_nu(nu))?;
    let space = StateSpace::enumerate(&net)?;
    let s = space.require(start)?;
    if target.is_empty() {
        return Err(Error::invalid("target set must be non-empty"));
    }
    let set: BTreeSet<usize> = target.iter().map(|x| space.require(x)).collect::<Result<_>>()?;
    if set.contains(&s) {
        return Err(Error::invalid("start state lies in the target set"));
    }
    let mut mask = vec![false; space.len()];
    for &k in &set {
        mask[k] = true;
    }
    warn_large_nu(nu);
    let table = (config.mode == SimMode::CtmcExact).then(|| rate_table(&space, nu));
    let runs: Vec<(f64, bool)> = (0..config.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(config.seed, r);
            let mut tally = Tally::new(&space);
            let stop = Stop::Target(&mask);
            let t = match &table {
                Some((rates, exit)) => run_ctmc(&space, rates, exit, s, stop, config, &mut rng, &mut tally, r),
                None => run_events(&net, &space, nu, s, stop, config, &mut rng, &mut tally, r),
            };
            (t, tally.truncated)
        })
        .collect();
    let capped: Vec<usize> = runs.iter().enumerate().filter(|(_, r)| r.1).map(|(i, _)| i).collect();
    if !capped.is_empty() {
        return Err(Error::Simulation(format!(
            "{} of {} replicas exceeded the event cap of {} (first: replica {})",
            capped.len(),
            runs.len(),
            config.max_events,
            capped[0]
        )));
    }
    let samples: Vec<f64> = runs.into_iter().map(|r| r.0).collect();
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let stderr = if samples.len() > 1 {
        (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
    } else {
        f64::NAN
    };
    Ok(HittingEstimate {
        nu,
        mean,
        stderr,
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InsensitivityReport {
    pub nu: f64,
    pub backoff: String,
    pub transmit: String,
    pub horizon: f64,
    pub events: u64,
    /// Total-variation distance between time-weighted occupancy and the
    /// product-form stationary law.
    pub tv_distance: f64,
}

/// Smallest number of events accepted as evidence for an occupancy estimate.
pub const MIN_INSENSITIVITY_EVENTS: u64 = 10_000;

pub fn insensitivity_check(
    net: &MultiChannelNetwork,
    nu: f64,
    backoff: TimerDist,
    transmit: TimerDist,
    config: &SimConfig,
) -> Result<InsensitivityReport> {
    let cfg = SimConfig {
        backoff,
        transmit,
        mode: SimMode::EventDriven,
        ..config.clone()
    };
    let net = net.with_rates(net.rates().with_nu(nu))?;
    let space = StateSpace::enumerate(&net)?;
    let stats = simulate(&net, Some(&space), &cfg)?;
    if stats.events < MIN_INSENSITIVITY_EVENTS || stats.truncated_replicas > 0 {
        return Err(Error::Simulation(format!(
            "horizon gave {} events ({} truncated replicas); at least {MIN_INSENSITIVITY_EVENTS} are needed",
            stats.events, stats.truncated_replicas
        )));
    }
    let pi = stationary_distribution(&space, nu)?;
    let tv = 0.5 * pi.iter().zip(&stats.state_occupancy).map(|(p, q)| (p - q).abs()).sum::<f64>();
    Ok(InsensitivityReport {
        nu,
        backoff: backoff.to_string(),
        transmit: transmit.to_string(),
        horizon: cfg.horizon * cfg.replicas as f64,
        events: stats.events,
        tv_distance: tv,
    })
}
