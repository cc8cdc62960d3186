//! `polyomwu` command-line tool.
//!
//! Exit status: 0 success, 1 validation failure or runtime error, 2 usage
//! error, 3 numerical divergence.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polyomwu::experiment::{parse_seeds, EtaSpec, SafeTag};
use polyomwu::*;

#[derive(Parser)]
#[command(name = "polyomwu", version, about = "Optimistic MWU on zero-sum polymatrix games with delayed feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random zero-sum polymatrix game.
    Gen(GenArgs),
    /// Compute the quantal response equilibrium of a game.
    Qre(QreArgs),
    /// Run an experiment preset or a custom configuration.
    Run(Box<RunArgs>),
    /// Check a game file or a delay schedule.
    Validate {
        #[command(subcommand)]
        target: ValidateTarget,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    actions: usize,
    /// `complete` or an edge list such as `0-1,1-2`.
    #[arg(long, default_value = "complete")]
    graph: GraphSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QreArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 2_000_000)]
    max_iter: usize,
    /// Output file for the solution; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DelayKind {
    None,
    Fixed,
    Uniform,
    Poisson,
    Permuted,
    Replay,
}

impl DelayKind {
    fn name(self) -> &'static str {
        match self {
            DelayKind::None => "none",
            DelayKind::Fixed => "fixed",
            DelayKind::Uniform => "uniform",
            DelayKind::Poisson => "poisson",
            DelayKind::Permuted => "permuted",
            DelayKind::Replay => "replay",
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// fig1a, fig1b, fig1c, fig2a, fig2b, fig2c or custom.
    #[arg(long)]
    preset: Option<Preset>,
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    game: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    actions: Option<usize>,
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    /// A number or `safe`.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long, conflicts_with = "two_timescale")]
    eta_bar: Option<f64>,
    /// Extrapolate with the theory rate `η̄`.
    #[arg(long)]
    two_timescale: bool,
    #[arg(long, value_enum)]
    delay: Option<DelayKind>,
    #[arg(long)]
    gamma: Option<u32>,
    /// Mean Poisson delay.
    #[arg(long)]
    pmean: Option<f64>,
    /// Truncation of Poisson delays.
    #[arg(long)]
    pcap: Option<u32>,
    /// Permutation file for `--delay replay`.
    #[arg(long)]
    schedule_file: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    record_every: Option<usize>,
    /// Seed list such as `0,1,2` or `0..5`.
    #[arg(long)]
    seeds: Option<String>,
    /// Record per-player regret columns.
    #[arg(long)]
    regret: bool,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum ValidateTarget {
    /// Check the zero-sum property of a game file.
    Game {
        #[arg(long)]
        game: PathBuf,
        /// Check sampled pure profiles instead of pairwise antisymmetry.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replay a delay schedule and check its invariants.
    Schedule {
        #[arg(long, value_enum)]
        delay: DelayKind,
        #[arg(long)]
        gamma: Option<u32>,
        #[arg(long)]
        pmean: Option<f64>,
        #[arg(long)]
        pcap: Option<u32>,
        #[arg(long)]
        schedule_file: Option<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        agents: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the schedule as a permutation file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

/// Bad arguments detected after parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_game(path: &Path) -> Result<PolymatrixGame> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(PolymatrixGame::from_json(&text)?)
}

fn cmd_gen(a: GenArgs) -> Result<u8> {
    if a.n < 2 || a.actions < 1 {
        return Err(usage("gen needs --n >= 2 and --actions >= 1"));
    }
    let game = PolymatrixGame::random_zero_sum(a.n, a.actions, &a.graph, a.seed)?;
    write_output(a.out.as_deref(), &(game.to_json() + "\n"))?;
    let s = game.stats();
    eprintln!("d_max={} a_inf={} s_max={} sha256={}", s.d_max, s.a_inf, s.s_max, game.content_hash());
    Ok(0)
}

fn cmd_qre(a: QreArgs) -> Result<u8> {
    if a.tau.is_nan() || a.tau <= 0.0 {
        return Err(usage(format!("QRE requires --tau > 0, got {}", a.tau)));
    }
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(usage("--tol must be positive"));
    }
    let game = load_game(&a.game)?;
    match compute_qre(&game, a.tau, a.tol, a.max_iter) {
        Ok(sol) => {
            write_output(a.out.as_deref(), &(serde_json::to_string_pretty(&sol)? + "\n"))?;
            eprintln!("residual={:e} iterations={}", sol.residual, sol.iterations);
            Ok(0)
        }
        Err(MetricError::QreNotConverged { iterations, residual }) => {
            eprintln!("not converged: residual={residual:e} after {iterations} iterations");
            Ok(1)
        }
        Err(e) => Err(e.into()),
    }
}

fn flags_config(a: &RunArgs) -> Result<FileConfig> {
    let eta = match a.eta.as_deref() {
        None => None,
        Some("safe") => Some(EtaSpec::Named(SafeTag::Safe)),
        Some(v) => Some(EtaSpec::Value(v.parse().map_err(|_| usage(format!("--eta: not a number: {v}")))?)),
    };
    let seeds = a.seeds.as_deref().map(parse_seeds).transpose().map_err(|e| usage(e.to_string()))?;
    Ok(FileConfig {
        game: a.game.clone(),
        n: a.n,
        actions: a.actions,
        graph: a.graph.clone(),
        tau: a.tau,
        eta,
        eta_bar: a.eta_bar,
        two_timescale: a.two_timescale.then_some(true),
        delay: a.delay.map(|d| d.name().to_string()),
        gamma: a.gamma,
        pmean: a.pmean,
        pcap: a.pcap,
        schedule_file: a.schedule_file.clone(),
        horizon: a.horizon,
        record_every: a.record_every,
        seeds,
        jobs: None,
        regret: a.regret.then_some(true),
        ne_gap: None,
        qre_metrics: None,
    })
}

fn cmd_run(a: RunArgs) -> Result<u8> {
    let flags = flags_config(&a)?;
    let mut plan = match a.preset {
        Some(p) if p != Preset::Custom => {
            if a.config.is_some() || flags != FileConfig::default() {
                return Err(usage(format!("preset {p} takes only --out and --jobs")));
            }
            ExperimentPlan::preset(p)?
        }
        preset => {
            let mut cfg = match &a.config {
                Some(path) => FileConfig::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?,
                None if preset == Some(Preset::Custom) => return Err(usage("preset custom needs --config")),
                None => FileConfig::default(),
            };
            cfg.overlay(&flags);
            let config = cfg.to_run_config().map_err(|e| match e {
                HarnessError::Config(m) => usage(m),
                other => other.into(),
            })?;
            ExperimentPlan::custom(config)
        }
    };
    plan.set_jobs(a.jobs.max(1));
    eprintln!("running {} ({} grid points)", plan.preset, plan.points.len());
    let result = execute_plan(&plan, &a.out)?;
    println!("{}", result.dir.display());
    print!("{}", polyomwu::experiment::summary_csv(&result.summary));
    Ok(0)
}

fn delay_variant(
    kind: DelayKind,
    gamma: Option<u32>,
    pmean: Option<f64>,
    pcap: Option<u32>,
    file: Option<&Path>,
) -> Result<DelayVariant> {
    let gamma = || gamma.ok_or_else(|| usage("this delay model needs --gamma"));
    Ok(match kind {
        DelayKind::None => DelayVariant::None,
        DelayKind::Fixed => DelayVariant::Fixed { gamma: gamma()? },
        DelayKind::Uniform => DelayVariant::BoundedUniform { gamma: gamma()? },
        DelayKind::Permuted => DelayVariant::Permuted { gamma: gamma()? },
        DelayKind::Poisson => {
            DelayVariant::Poisson { mean: pmean.ok_or_else(|| usage("poisson delays need --pmean"))?, cap: pcap }
        }
        DelayKind::Replay => {
            let path = file.ok_or_else(|| usage("replay needs --schedule-file"))?;
            let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
            let table = ReplayTable::read(reader)?;
            DelayVariant::Replay { source: path.display().to_string(), table: Arc::new(table) }
        }
    })
}

fn cmd_validate(target: ValidateTarget) -> Result<u8> {
    match target {
        ValidateTarget::Game { game, samples, tol, seed } => {
            let game = load_game(&game)?;
            let mode = match samples {
                Some(0) => return Err(usage("--samples must be at least 1")),
                Some(samples) => ZeroSumCheck::Sampled { samples, tol, seed },
                None => ZeroSumCheck::ExactPairwise { tol },
            };
            let v = game.check_zero_sum(mode);
            println!("zero-sum: {} (max residual {:e})", if v.passed { "pass" } else { "FAIL" }, v.max_residual);
            Ok(if v.passed { 0 } else { 1 })
        }
        ValidateTarget::Schedule { delay, gamma, pmean, pcap, schedule_file, horizon, agents, seed, dump } => {
            if agents == 0 || horizon == 0 {
                return Err(usage("--agents and --horizon must be positive"));
            }
            let variant = delay_variant(delay, gamma, pmean, pcap, schedule_file.as_deref())?;
            let mut ok = true;
            for agent in 0..agents {
                let r = validate_schedule(&variant, agents, seed, horizon, agent)?;
                println!(
                    "agent {agent}: {} max_displacement={} mean_delay={:.4} violations={} duplicates={} missing={}",
                    if r.passed { "pass" } else { "FAIL" },
                    r.max_displacement,
                    r.mean_delay,
                    r.displacement_violations,
                    r.duplicates.len(),
                    r.missing.len()
                );
                ok &= r.passed;
            }
            if let Some(path) = dump {
                let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                write_permutation_file(&variant, agents, seed, horizon, &mut w)?;
                w.flush()?;
            }
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn exit_status(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<HarnessError>() {
        Some(h) if h.is_divergence() => 3,
        Some(HarnessError::Config(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Qre(a) => cmd_qre(a),
        Command::Run(a) => cmd_run(*a),
        Command::Validate { target } => cmd_validate(target),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
