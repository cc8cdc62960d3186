//! Runs OMWU over a game, a rate setting and a delay schedule, and records
//! metric trajectories.
//!
//! Iteration `t` of a run, for every agent `i`:
//!
//! 1. draw `κ_i^(t)` and form the feedback `f_i = A_i π̄^(κ_i^(t))`;
//! 2. for `t ≥ 1`, update `π_i^(t−1) → π_i^(t)` with `f_i` at rate `η`;
//! 3. record metrics of `π^(t)` and `π̄^(t)` (every `record_every` steps);
//! 4. extrapolate `π_i^(t) → π̄_i^(t+1)` with the *same* `f_i` at rate `η̄`.

use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::delay::{delay_constants, DelaySchedule, DelayVariant};
use crate::dynamics::{safe_rate, two_timescale_rate, AgentState, Mode, RateSetting, Regime};
use crate::game::{GameStats, GraphSpec, PolymatrixGame, StrategyProfile};
use crate::metrics::{compute_qre, kl, kl_profile, ne_gap, qre_gap, QreSolution, RegretTracker, QRE_MAX_ITER, QRE_TOL};
use crate::HarnessError;

/// Where a run's game comes from.
#[derive(Debug, Clone)]
pub enum GameSource {
    /// A fixed game shared by every seed.
    Fixed(Arc<PolymatrixGame>),
    /// A fresh random zero-sum game per seed, generated with the run seed.
    Generated { n: usize, action_size: usize, graph: GraphSpec },
}

impl GameSource {
    pub fn game_for_seed(&self, seed: u64) -> Result<Arc<PolymatrixGame>, HarnessError> {
        match self {
            GameSource::Fixed(g) => Ok(Arc::clone(g)),
            GameSource::Generated { n, action_size, graph } => {
                Ok(Arc::new(PolymatrixGame::random_zero_sum(*n, *action_size, graph, seed)?))
            }
        }
    }
}

impl Serialize for GameSource {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(tag = "kind", rename_all = "kebab-case")]
        enum Echo {
            Fixed { sha256: String },
            Generated { n: usize, action_size: usize, graph: String },
        }
        match self {
            GameSource::Fixed(g) => Echo::Fixed { sha256: g.content_hash() },
            GameSource::Generated { n, action_size, graph } => {
                Echo::Generated { n: *n, action_size: *action_size, graph: graph.to_string() }
            }
        }
        .serialize(s)
    }
}

/// Learning rate `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaChoice {
    /// The largest rate the convergence bound for the delay regime allows.
    Safe,
    Explicit(f64),
}

/// Extrapolation rate `η̄` in two-timescale mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaBarChoice {
    /// `1 − η̄τ = (1 − ητ)^{γ+1}` with `γ` the schedule's delay bound.
    Theory,
    Explicit(f64),
}

/// Which optional metrics to record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet {
    /// KL divergences to the QRE and the QRE gap (need `τ > 0`).
    pub qre: bool,
    pub ne_gap: bool,
    pub regret: bool,
}

impl Default for MetricSet {
    fn default() -> Self {
        MetricSet { qre: true, ne_gap: true, regret: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub game: GameSource,
    pub tau: f64,
    pub mode: Mode,
    pub eta: EtaChoice,
    pub eta_bar: EtaBarChoice,
    pub delay: DelayVariant,
    pub horizon: usize,
    pub record_every: usize,
    pub seeds: Vec<u64>,
    pub metrics: MetricSet,
    pub qre_tol: f64,
    /// Keep the recorded profiles (needed for [`potential`]).
    pub retain_internals: bool,
    /// Worker threads for multi-seed runs; does not affect results.
    #[serde(skip)]
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(game: GameSource, tau: f64, eta: EtaChoice, horizon: usize) -> Self {
        RunConfig {
            game,
            tau,
            mode: Mode::Single,
            eta,
            eta_bar: EtaBarChoice::Theory,
            delay: DelayVariant::None,
            horizon,
            record_every: 1,
            seeds: vec![0],
            metrics: MetricSet::default(),
            qre_tol: QRE_TOL,
            retain_internals: false,
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.horizon < 1 {
            return bad("horizon must be at least 1");
        }
        if self.record_every < 1 {
            return bad("record_every must be at least 1");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return bad("tau must be a finite nonnegative number");
        }
        if self.metrics.qre && self.tau == 0.0 {
            return bad("QRE metrics need tau > 0");
        }
        if !(self.qre_tol > 0.0) {
            return bad("qre_tol must be positive");
        }
        if let EtaChoice::Explicit(eta) = self.eta {
            if !(eta > 0.0) || eta * self.tau >= 1.0 {
                return bad("eta must satisfy 0 < eta and eta * tau < 1");
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the JSON echo of this configuration.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialization cannot fail");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Learning-rate regime matching the delay variant.
    pub fn regime(&self) -> Result<Regime, HarnessError> {
        Ok(match &self.delay {
            DelayVariant::None => Regime::Sync,
            v @ (DelayVariant::BoundedUniform { .. } | DelayVariant::Poisson { .. }) => {
                Regime::RandomDelay(delay_constants(v)?)
            }
            DelayVariant::Fixed { gamma } => Regime::FixedDelay { gamma: *gamma },
            DelayVariant::Permuted { gamma } => Regime::Permuted { gamma: *gamma },
            DelayVariant::Replay { .. } => {
                return Err(HarnessError::Config("replayed schedules have no safe rate; pass eta".into()))
            }
        })
    }

    /// Resolves `η` and `η̄` against a concrete game.
    pub fn resolve_rates(&self, stats: &GameStats) -> Result<RateSetting, HarnessError> {
        let eta = match self.eta {
            EtaChoice::Explicit(eta) => eta,
            EtaChoice::Safe => safe_rate(self.regime()?, stats, self.tau)?.eta,
        };
        match self.mode {
            Mode::Single => Ok(RateSetting::single(eta, self.tau)?),
            Mode::TwoTimescale => {
                let eta_bar = match self.eta_bar {
                    EtaBarChoice::Explicit(b) => b,
                    EtaBarChoice::Theory => {
                        let gamma = self.delay.max_delay().ok_or_else(|| {
                            HarnessError::Config("unbounded delays need an explicit eta_bar".into())
                        })?;
                        two_timescale_rate(eta, self.tau, gamma as u32)
                    }
                };
                Ok(RateSetting::with_eta_bar(eta, eta_bar, self.tau)?)
            }
        }
    }
}

/// Metrics at one recorded iteration. `None` marks a disabled metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub t: usize,
    /// `KL(π* ‖ π^(t))`.
    pub kl_main: Option<f64>,
    /// `KL(π* ‖ π̄^(t))`.
    pub kl_extrap: Option<f64>,
    /// QRE gap of `π̄^(t)`.
    pub qre_gap: Option<f64>,
    /// NE gap of `π̄^(t)`.
    pub ne_gap: Option<f64>,
    /// Regret of each player against `π̄^(1..t)`; empty when disabled.
    pub regret: Vec<f64>,
}

/// Recorded profiles `π^(t)`, `π̄^(t)` aligned with [`Trajectory::records`].
#[derive(Debug, Clone)]
pub struct Internals {
    pub main: Vec<StrategyProfile>,
    pub extrap: Vec<StrategyProfile>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seed: u64,
    pub config_hash: String,
    pub game: Arc<PolymatrixGame>,
    pub stats: GameStats,
    pub rates: RateSetting,
    pub delay: DelayVariant,
    pub qre: Option<Arc<QreSolution>>,
    pub records: Vec<Record>,
    pub internals: Option<Internals>,
    pub final_main: StrategyProfile,
    pub final_extrap: StrategyProfile,
}

impl Trajectory {
    /// `KL(π* ‖ π^(0))`.
    pub fn kl0(&self) -> Option<f64> {
        self.records.first().and_then(|r| r.kl_main)
    }

    pub fn record_at(&self, t: usize) -> Option<&Record> {
        self.records.iter().find(|r| r.t == t)
    }
}

/// Process-wide cache of QRE references keyed by `(game hash, τ)`.
#[derive(Debug, Default)]
pub struct QreCache {
    entries: Mutex<HashMap<(String, u64), Arc<QreSolution>>>,
}

impl QreCache {
    pub fn global() -> &'static QreCache {
        static CACHE: OnceLock<QreCache> = OnceLock::new();
        CACHE.get_or_init(QreCache::default)
    }

    pub fn get_or_compute(&self, game: &PolymatrixGame, tau: f64, tol: f64) -> Result<Arc<QreSolution>, HarnessError> {
        let key = (game.content_hash(), tau.to_bits());
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&key) {
            if hit.residual <= tol {
                return Ok(Arc::clone(hit));
            }
        }
        let sol = Arc::new(compute_qre(game, tau, tol, QRE_MAX_ITER)?);
        self.entries.lock().expect("cache lock").insert(key, Arc::clone(&sol));
        Ok(sol)
    }
}

/// Extrapolation profiles `π̄^(s)` still reachable by some future `κ`.
struct FeedbackHistory {
    initial: Vec<Vec<f64>>,
    recent: VecDeque<Vec<Vec<f64>>>,
    /// Index of `recent[0]`.
    front: usize,
    depth: Option<usize>,
}

impl FeedbackHistory {
    fn new(initial: Vec<Vec<f64>>, depth: Option<usize>) -> Self {
        let mut recent = VecDeque::new();
        recent.push_back(initial.clone());
        FeedbackHistory { initial, recent, front: 0, depth }
    }

    /// Appends `π̄^(s)` where `s` is one past the newest index.
    fn push(&mut self, profile: Vec<Vec<f64>>) {
        self.recent.push_back(profile);
        if let Some(d) = self.depth {
            let newest = self.front + self.recent.len() - 1;
            while self.front + d < newest {
                self.recent.pop_front();
                self.front += 1;
            }
        }
    }

    fn get(&self, index: usize, t: usize) -> Result<&[Vec<f64>], HarnessError> {
        if index == 0 {
            return Ok(&self.initial);
        }
        index
            .checked_sub(self.front)
            .and_then(|k| self.recent.get(k))
            .map(Vec::as_slice)
            .ok_or(HarnessError::Evicted { t, index })
    }
}

/// Runs one seed of `config`.
pub fn run(config: &RunConfig, seed: u64) -> Result<Trajectory, HarnessError> {
    config.validate()?;
    let game = config.game.game_for_seed(seed)?;
    let qre = if config.metrics.qre {
        Some(QreCache::global().get_or_compute(&game, config.tau, config.qre_tol)?)
    } else {
        None
    };
    run_with(config, seed, game, qre)
}

fn run_with(
    config: &RunConfig,
    seed: u64,
    game: Arc<PolymatrixGame>,
    qre: Option<Arc<QreSolution>>,
) -> Result<Trajectory, HarnessError> {
    let stats = game.stats();
    let rates = config.resolve_rates(&stats)?;
    let tau = config.tau;
    let n = game.n();
    let sizes = game.action_sizes().to_vec();

    let mut schedule = DelaySchedule::new(config.delay.clone(), n, seed)?;
    let mut agents: Vec<AgentState> = sizes.iter().map(|&m| AgentState::uniform(m, &rates)).collect();
    let mut main: Vec<Vec<f64>> = agents.iter().map(AgentState::main).collect();
    let mut extrap: Vec<Vec<f64>> = agents.iter().map(AgentState::extrap).collect();
    let mut history = FeedbackHistory::new(extrap.clone(), config.delay.max_delay());
    let mut feedback: Vec<Vec<f64>> = sizes.iter().map(|&m| vec![0.0; m]).collect();
    let mut tracker = config.metrics.regret.then(|| RegretTracker::new(&sizes, tau));
    let mut own_payoff: Vec<Vec<f64>> = feedback.clone();

    let mut records = Vec::with_capacity(config.horizon / config.record_every + 1);
    let mut internals = config.retain_internals.then(|| Internals { main: Vec::new(), extrap: Vec::new() });

    for t in 0..config.horizon {
        for (i, f) in feedback.iter_mut().enumerate() {
            let kappa = schedule.next_kappa(i, t)?;
            let source = history.get(kappa, t)?;
            f.iter_mut().for_each(|v| *v = 0.0);
            game.accumulate_payoff(i, |j| &source[j], f);
        }
        if t >= 1 {
            for (i, agent) in agents.iter_mut().enumerate() {
                agent.update_main(&feedback[i], tau)?;
                main[i] = agent.main();
            }
            if let Some(tr) = tracker.as_mut() {
                for (i, q) in own_payoff.iter_mut().enumerate() {
                    q.iter_mut().for_each(|v| *v = 0.0);
                    game.accumulate_payoff(i, |j| &extrap[j], q);
                }
                tr.push(&extrap, &own_payoff);
            }
        }
        if t % config.record_every == 0 {
            let main_p = StrategyProfile::from_normalized(main.clone());
            let extrap_p = StrategyProfile::from_normalized(extrap.clone());
            records.push(measure(&game, &main_p, &extrap_p, qre.as_deref(), tau, config, tracker.as_ref(), t)?);
            if let Some(int) = internals.as_mut() {
                int.main.push(main_p);
                int.extrap.push(extrap_p);
            }
        }
        for (i, agent) in agents.iter_mut().enumerate() {
            agent.update_extrap(&feedback[i], tau)?;
            if !agent.is_finite() {
                return Err(HarnessError::Diverged(t));
            }
            extrap[i] = agent.extrap();
        }
        history.push(extrap.clone());
    }

    Ok(Trajectory {
        seed,
        config_hash: config.content_hash(),
        stats,
        rates,
        delay: config.delay.clone(),
        qre,
        records,
        internals,
        final_main: StrategyProfile::from_normalized(main),
        final_extrap: StrategyProfile::from_normalized(extrap),
        game,
    })
}

#[allow(clippy::too_many_arguments)]
fn measure(
    game: &PolymatrixGame,
    main: &StrategyProfile,
    extrap: &StrategyProfile,
    qre: Option<&QreSolution>,
    tau: f64,
    config: &RunConfig,
    tracker: Option<&RegretTracker>,
    t: usize,
) -> Result<Record, HarnessError> {
    let (kl_main, kl_extrap, gap) = match qre {
        Some(q) => (
            Some(kl_profile(&q.profile, main)?),
            Some(kl_profile(&q.profile, extrap)?),
            Some(qre_gap(game, extrap, tau)?),
        ),
        None => (None, None, None),
    };
    let ne = if config.metrics.ne_gap { Some(ne_gap(game, extrap)?) } else { None };
    let regret = tracker.map(RegretTracker::regrets).unwrap_or_default();
    let record = Record { t, kl_main, kl_extrap, qre_gap: gap, ne_gap: ne, regret };
    let finite = [record.kl_main, record.kl_extrap, record.qre_gap, record.ne_gap]
        .iter()
        .flatten()
        .chain(&record.regret)
        .all(|v| v.is_finite());
    if !finite {
        return Err(HarnessError::Diverged(t));
    }
    Ok(record)
}

/// Mean trajectory over seeds plus the per-seed runs.
#[derive(Debug, Clone)]
pub struct AveragedRun {
    pub mean: Vec<Record>,
    pub per_seed: Vec<Trajectory>,
}

/// Runs every seed of `config` (in parallel up to `config.jobs`) and averages
/// each metric across seeds at matching `t`.
pub fn run_averaged(config: &RunConfig) -> Result<AveragedRun, HarnessError> {
    config.validate()?;
    let one = |&seed: &u64| run(config, seed).map_err(|e| HarnessError::Seed { seed, source: Box::new(e) });
    let per_seed: Vec<Trajectory> = if config.jobs > 1 && config.seeds.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        pool.install(|| config.seeds.par_iter().map(one).collect::<Result<_, _>>())?
    } else {
        config.seeds.iter().map(one).collect::<Result<_, _>>()?
    };
    let mean = mean_records(&per_seed);
    Ok(AveragedRun { mean, per_seed })
}

fn mean_records(runs: &[Trajectory]) -> Vec<Record> {
    let s = runs.len() as f64;
    let avg = |vals: Vec<Option<f64>>| -> Option<f64> {
        vals.iter().copied().collect::<Option<Vec<f64>>>().map(|v| v.iter().sum::<f64>() / s)
    };
    (0..runs[0].records.len())
        .map(|k| {
            let at: Vec<&Record> = runs.iter().map(|r| &r.records[k]).collect();
            let players = at[0].regret.len();
            Record {
                t: at[0].t,
                kl_main: avg(at.iter().map(|r| r.kl_main).collect()),
                kl_extrap: avg(at.iter().map(|r| r.kl_extrap).collect()),
                qre_gap: avg(at.iter().map(|r| r.qre_gap).collect()),
                ne_gap: avg(at.iter().map(|r| r.ne_gap).collect()),
                regret: (0..players).map(|p| at.iter().map(|r| r.regret[p]).sum::<f64>() / s).collect(),
            }
        })
        .collect()
}

/// Least-squares fit of `ln kl_main` against `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Per-iteration contraction factor `exp(slope)`.
    pub rho: f64,
    pub slope: f64,
    pub intercept: f64,
    pub t0: usize,
    pub t1: usize,
    pub points: usize,
}

/// Fits the contraction rate of `kl_main` over records with `t0 ≤ t ≤ t1`.
pub fn fit_rate(records: &[Record], t0: usize, t1: usize) -> Result<RateFit, HarnessError> {
    let mut pts = Vec::new();
    for r in records.iter().filter(|r| r.t >= t0 && r.t <= t1) {
        match r.kl_main {
            Some(v) if v > 0.0 => pts.push((r.t as f64, v.ln())),
            _ => return Err(HarnessError::Config(format!("kl_main is not positive at t = {}", r.t))),
        }
    }
    if pts.len() < 2 {
        return Err(HarnessError::Config("rate fit needs at least two points".into()));
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok(RateFit { rho: slope.exp(), slope, intercept: my - slope * mx, t0, t1, points: pts.len() })
}

/// `L^(t) = KL(π*‖π^(t)) + (1 − 2η d_max ‖A‖∞)·KL(π^(t)‖π̄^(t))` at record `k`.
///
/// Only meaningful for synchronous single-timescale runs that kept internals.
pub fn potential(trajectory: &Trajectory, k: usize) -> Result<f64, HarnessError> {
    let int = trajectory
        .internals
        .as_ref()
        .ok_or(HarnessError::Unavailable("run did not retain internals"))?;
    let qre = trajectory.qre.as_ref().ok_or(HarnessError::Unavailable("run has no QRE reference"))?;
    if trajectory.rates.mode != Mode::Single || trajectory.delay != DelayVariant::None {
        return Err(HarnessError::Unavailable("potential is defined for synchronous single-timescale runs"));
    }
    let (main, extrap) = match (int.main.get(k), int.extrap.get(k)) {
        (Some(m), Some(e)) => (m, e),
        _ => return Err(HarnessError::Unavailable("record index out of range")),
    };
    let s = &trajectory.stats;
    let weight = 1.0 - 2.0 * trajectory.rates.eta * s.d_max as f64 * s.a_inf;
    Ok(kl_profile(&qre.profile, main)? + weight * kl_profile(main, extrap)?)
}

/// The CSV header for `players` regret columns.
pub fn csv_header(players: usize) -> String {
    let mut h = String::from("t,kl_main,kl_extrap,qre_gap,ne_gap");
    for i in 0..players {
        h.push_str(&format!(",regret_{i}"));
    }
    h
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Writes records as CSV. Floats use shortest round-trip scientific notation;
/// disabled metrics are empty fields.
pub fn write_csv<W: Write>(records: &[Record], mut out: W) -> std::io::Result<()> {
    let players = records.first().map_or(0, |r| r.regret.len());
    writeln!(out, "{}", csv_header(players))?;
    for r in records {
        write!(
            out,
            "{},{},{},{},{}",
            r.t,
            fmt_opt(r.kl_main),
            fmt_opt(r.kl_extrap),
            fmt_opt(r.qre_gap),
            fmt_opt(r.ne_gap)
        )?;
        for v in &r.regret {
            write!(out, ",{v:e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn csv_string(records: &[Record]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

#[derive(Serialize)]
struct QreEcho {
    tau: f64,
    residual: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct SeedMeta<'a> {
    config: &'a RunConfig,
    config_hash: &'a str,
    seed: u64,
    game_sha256: String,
    stats: GameStats,
    rates: RateSetting,
    qre: Option<QreEcho>,
    csv_sha256: String,
    final_main: &'a StrategyProfile,
    final_extrap: &'a StrategyProfile,
}

/// Writes `seed_<s>.csv` + `seed_<s>.json` per seed and `mean.csv` into `dir`.
pub fn write_run_dir(dir: &Path, config: &RunConfig, run: &AveragedRun) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let config_hash = config.content_hash();
    for traj in &run.per_seed {
        let csv = csv_string(&traj.records);
        std::fs::write(dir.join(format!("seed_{}.csv", traj.seed)), &csv)?;
        let meta = SeedMeta {
            config,
            config_hash: &config_hash,
            seed: traj.seed,
            game_sha256: traj.game.content_hash(),
            stats: traj.stats,
            rates: traj.rates,
            qre: traj.qre.as_ref().map(|q| QreEcho { tau: q.tau, residual: q.residual, iterations: q.iterations }),
            csv_sha256: hex::encode(Sha256::digest(csv.as_bytes())),
            final_main: &traj.final_main,
            final_extrap: &traj.final_extrap,
        };
        std::fs::write(dir.join(format!("seed_{}.json", traj.seed)), serde_json::to_string_pretty(&meta)? + "\n")?;
    }
    std::fs::write(dir.join("mean.csv"), csv_string(&run.mean))?;
    Ok(())
}

/// Final-iterate summary used by learning-rate sweeps.
pub fn final_kl(run: &AveragedRun) -> Option<f64> {
    run.mean.last().and_then(|r| r.kl_main)
}

/// `KL(π* ‖ π)` for a single player's strategy, exposed for diagnostics.
pub fn player_kl(qre: &QreSolution, i: usize, strategy: &[f64]) -> Result<f64, HarnessError> {
    Ok(kl(qre.profile.player(i), strategy)?)
}
