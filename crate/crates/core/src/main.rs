use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use csma_core::analysis::{
    dominant_height_matrix, gamma, hitting_exponent, mixing_bound, starvation_indices, Height, Marker,
    DEFAULT_NU_GRID,
};
use csma_core::conflict_graph::{read_network_file, DEFAULT_NODE_CAP};
use csma_core::report::{analyze_space, fit_csv, sweep_channels, AnalyzeOptions, RunManifest};
use csma_core::simulator::{simulate, SimConfig, SimMode, TimerDist};
use csma_core::state_space::DEFAULT_STATE_CAP;
use csma_core::verify::{verify_corpus, VerifyOptions};
use csma_core::virtual_network::{build_virtual, VirtualGraphFile};
use csma_core::{ActivityState, Error, MultiChannelNetwork, Result, StateSpace};

#[derive(Parser, Serialize)]
#[command(name = "csma", version, about = "Exact analysis and simulation of multi-channel CSMA networks")]
struct Cli {
    /// Refuse state spaces larger than this.
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_CAP)]
    cap: usize,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Full JSON report: throughput, fairness, heights, starvation.
    Analyze {
        network: PathBuf,
        #[command(flatten)]
        grid: Grid,
        /// Also write the virtual single-channel graph to this file.
        #[arg(long)]
        emit_virtual: Option<PathBuf>,
    },
    /// Maximum activity and the dominant states.
    Dominants { network: PathBuf },
    /// Height matrix, per-node starvation indices and the mixing exponent.
    Starvation { network: PathBuf },
    /// Exact expected hitting times over the nu grid.
    Hitting {
        network: PathBuf,
        /// Start state, e.g. 1020. Defaults to the first dominant state.
        #[arg(long)]
        from: Option<String>,
        /// Target state; repeat for a set. Defaults to the other dominant states.
        #[arg(long)]
        to: Vec<String>,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Conductance lower bound on the mixing time over the nu grid.
    Mixing {
        network: PathBuf,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Monte Carlo trajectory statistics.
    Simulate {
        network: PathBuf,
        /// Overrides the rate scale of the network file.
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[arg(long, default_value_t = 1e4)]
        horizon: f64,
        #[arg(long, default_value_t = 100_000_000)]
        max_events: u64,
        /// exp, det or unif:a,b
        #[arg(long, default_value = "exp")]
        backoff: String,
        #[arg(long, default_value = "exp")]
        transmit: String,
        /// exact or event
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Write the event log as CSV to this file.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Throughput, fairness and starvation for C = 1 ..= c_max.
    SweepChannels {
        network: PathBuf,
        #[arg(long)]
        c_max: usize,
    },
    /// Run every property check over a corpus directory.
    Verify {
        corpus: PathBuf,
        /// Include the reconstructed instances in the `figures` subdirectory.
        #[arg(long)]
        figures: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        grid: Grid,
    },
}

#[derive(Args, Serialize)]
struct Grid {
    /// Comma-separated activation rates.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_NU_GRID)]
    nu_grid: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

struct Loaded {
    name: Option<String>,
    net: MultiChannelNetwork,
    bytes: Vec<u8>,
}

fn load(path: &Path) -> Result<Loaded> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (file, net) = read_network_file(path)?;
    Ok(Loaded {
        name: file.name,
        net,
        bytes,
    })
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn parse_state(s: &str) -> Result<ActivityState> {
    s.parse()
}

#[derive(Serialize)]
struct DominantsReport {
    manifest: RunManifest,
    state_count: usize,
    max_activity: usize,
    max_level: Height,
    dominant_count: usize,
    dominant_states: Vec<ActivityState>,
}

#[derive(Serialize)]
struct StarvationReport {
    manifest: RunManifest,
    dominant_states: Vec<ActivityState>,
    delta_matrix: Vec<Vec<Height>>,
    upsilon_per_node: Vec<csma_core::analysis::NodeStarvation>,
    upsilon: Marker<Height>,
    gamma: Marker<Height>,
}

#[derive(Serialize)]
struct HittingReport {
    manifest: RunManifest,
    from: ActivityState,
    to: Vec<ActivityState>,
    result: csma_core::analysis::HittingExponent,
}

/// Report text and whether every check passed.
fn run(cli: &Cli) -> Result<(String, bool)> {
    let config = serde_json::to_value(cli)?;
    let name = match &cli.command {
        Command::Analyze { .. } => "analyze",
        Command::Dominants { .. } => "dominants",
        Command::Starvation { .. } => "starvation",
        Command::Hitting { .. } => "hitting",
        Command::Mixing { .. } => "mixing",
        Command::Simulate { .. } => "simulate",
        Command::SweepChannels { .. } => "sweep-channels",
        Command::Verify { .. } => "verify",
    };
    let manifest = |input: Option<&[u8]>, seed: Option<u64>| RunManifest::new(name, config.clone(), input, seed);
    let space_of = |l: &Loaded| StateSpace::enumerate_with_cap(&l.net, cli.cap);

    let out = match &cli.command {
        Command::Analyze {
            network,
            grid,
            emit_virtual,
        } => {
            let l = load(network)?;
            if let Some(path) = emit_virtual {
                let v = build_virtual(&l.net)?;
                write_file(path, &json(&VirtualGraphFile::from(&v))?)?;
            }
            let space = space_of(&l)?;
            let opts = AnalyzeOptions {
                nu_grid: grid.nu_grid.clone(),
                state_cap: cli.cap,
                node_cap: DEFAULT_NODE_CAP,
                ..Default::default()
            };
            json(&analyze_space(&l.net, &space, l.name, &opts, manifest(Some(&l.bytes), None))?)?
        }
        Command::Dominants { network } => {
            let l = load(network)?;
            let space = space_of(&l)?;
            json(&DominantsReport {
                manifest: manifest(Some(&l.bytes), None),
                state_count: space.len(),
                max_activity: space.max_activity(),
                max_level: Height(space.max_level()),
                dominant_count: space.dominant().len(),
                dominant_states: space.dominant_states(),
            })?
        }
        Command::Starvation { network } => {
            let l = load(network)?;
            let space = space_of(&l)?;
            let st = starvation_indices(&space);
            json(&StarvationReport {
                manifest: manifest(Some(&l.bytes), None),
                dominant_states: space.dominant_states(),
                delta_matrix: dominant_height_matrix(&space)
                    .into_iter()
                    .map(|r| r.into_iter().map(Height).collect())
                    .collect(),
                upsilon_per_node: st.per_node,
                upsilon: st.network.map(Height).into(),
                gamma: gamma(&space).map(Height).into(),
            })?
        }
        Command::Hitting {
            network,
            from,
            to,
            grid,
            format,
        } => {
            let l = load(network)?;
            let space = space_of(&l)?;
            let dom = space.dominant();
            let start = match from {
                Some(s) => space.require(&parse_state(s)?)?,
                None => dom[0],
            };
            let target: Vec<usize> = if to.is_empty() {
                dom.iter().copied().filter(|&k| k != start).collect()
            } else {
                to.iter().map(|s| space.require(&parse_state(s)?)).collect::<Result<_>>()?
            };
            if target.is_empty() {
                return Err(Error::InvalidArgument(
                    "no target: the network has a single dominant state; pass --to".into(),
                ));
            }
            let result = hitting_exponent(&space, start, &target, &grid.nu_grid)?;
            let m = manifest(Some(&l.bytes), None);
            match format {
                Format::Csv => fit_csv(&m, &result.fit),
                Format::Json => json(&HittingReport {
                    manifest: m,
                    from: space.activity_state(start),
                    to: target.iter().map(|&k| space.activity_state(k)).collect(),
                    result,
                })?,
            }
        }
        Command::Mixing {
            network,
            grid,
            epsilon,
            format,
        } => {
            let l = load(network)?;
            let space = space_of(&l)?;
            let report = mixing_bound(&space, &grid.nu_grid, *epsilon)?.ok_or_else(|| {
                Error::Unsupported("mixing bound needs at least two dominant states".into())
            })?;
            let m = manifest(Some(&l.bytes), None);
            match format {
                Format::Csv => fit_csv(&m, &report.bound_exponent),
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        manifest: RunManifest,
                        #[serde(flatten)]
                        report: csma_core::analysis::MixingReport,
                    }
                    json(&Out { manifest: m, report })?
                }
            }
        }
        Command::Simulate {
            network,
            nu,
            seed,
            replicas,
            horizon,
            max_events,
            backoff,
            transmit,
            mode,
            events,
        } => {
            let l = load(network)?;
            let net = match nu {
                Some(v) => l.net.with_rates(l.net.rates().with_nu(*v))?,
                None => l.net.clone(),
            };
            let cfg = SimConfig {
                seed: *seed,
                replicas: *replicas,
                horizon: *horizon,
                max_events: *max_events,
                backoff: backoff.parse::<TimerDist>()?,
                transmit: transmit.parse::<TimerDist>()?,
                mode: mode.parse::<SimMode>()?,
                record_events: events.is_some(),
            };
            let space = StateSpace::enumerate_with_cap(&net, cli.cap).ok();
            let mut stats = simulate(&net, space.as_ref(), &cfg)?;
            if let Some(path) = events {
                let m = manifest(Some(&l.bytes), Some(*seed));
                let mut csv = m.csv_header() + "replica,time,node,channel,activate\n";
                for e in &stats.event_log {
                    csv += &format!("{},{},{},{},{}\n", e.replica, e.time, e.node, e.channel, e.activate as u8);
                }
                write_file(path, &csv)?;
                stats.event_log.clear();
            }
            #[derive(Serialize)]
            struct Out<'a> {
                manifest: RunManifest,
                config: &'a SimConfig,
                stats: csma_core::simulator::TrajectoryStats,
            }
            json(&Out {
                manifest: manifest(Some(&l.bytes), Some(*seed)),
                config: &cfg,
                stats,
            })?
        }
        Command::SweepChannels { network, c_max } => {
            let l = load(network)?;
            let report = sweep_channels(&l.net, *c_max, cli.cap, manifest(Some(&l.bytes), None))?;
            let ok = report.theta_violations.is_empty();
            return Ok((json(&report)?, ok));
        }
        Command::Verify {
            corpus,
            figures,
            seed,
            grid,
        } => {
            let opts = VerifyOptions {
                include_figures: *figures,
                state_cap: cli.cap,
                nu_grid: grid.nu_grid.clone(),
                ..Default::default()
            };
            let report = verify_corpus(corpus, &opts, manifest(None, *seed))?;
            for c in report.checks.iter().filter(|c| c.status == csma_core::verify::Status::Fail) {
                log::error!("{} / {}: {}", c.instance, c.check, c.detail);
            }
            return Ok((json(&report)?, report.all_passed()));
        }
    };
    Ok((out, true))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output {
        Some(path) => write_file(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = run(&cli).and_then(|(text, ok)| emit(&cli, &text).map(|_| ok));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let body = serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            eprintln!("{body}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
