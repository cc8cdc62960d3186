//! Named experiment presets and the JSON run-configuration file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::delay::{DelayVariant, ReplayTable};
use crate::dynamics::Mode;
use crate::game::{GraphSpec, PolymatrixGame};
use crate::harness::{
    final_kl, run_averaged, write_run_dir, AveragedRun, EtaBarChoice, EtaChoice, GameSource, MetricSet, RunConfig,
};
use crate::HarnessError;

pub const DEFAULT_N: usize = 10;
pub const DEFAULT_ACTIONS: usize = 10;
pub const DEFAULT_TAU: f64 = 0.1;
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
pub const DEFAULT_HORIZON: usize = 5000;
/// Record stride used by presets.
pub const PRESET_RECORD_EVERY: usize = 10;

/// Learning-rate grid `0.1, 0.05, 0.02, 0.01, …` down to `1e-6`.
pub fn default_eta_grid() -> Vec<f64> {
    let mut grid = Vec::new();
    for exp in 1..=6 {
        let base = 10f64.powi(-exp);
        grid.push(base);
        if exp < 6 {
            grid.push(base / 2.0);
            grid.push(base / 5.0);
        }
    }
    grid.sort_by(|a, b| b.total_cmp(a));
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig2a,
    Fig2b,
    Fig2c,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::Fig1a, Preset::Fig1b, Preset::Fig1c, Preset::Fig2a, Preset::Fig2b, Preset::Fig2c];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1a => "fig1a",
            Preset::Fig1b => "fig1b",
            Preset::Fig1c => "fig1c",
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig2c => "fig2c",
            Preset::Custom => "custom",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Fig1a => "single-timescale, synchronous vs delays uniform on {0..10}, eta grid",
            Preset::Fig1b => "permuted feedback gamma=25, eta grid, single and two-timescale",
            Preset::Fig1c => "permuted feedback gamma=25, eta=1e-3, eta_bar grid including the theory value",
            Preset::Fig2a => "random delays bounded by gamma=25, eta grid, single and two-timescale",
            Preset::Fig2b => "constant delay gamma=50, eta grid, single and two-timescale",
            Preset::Fig2c => "permuted feedback gamma=25, eta grid, single and two-timescale",
            Preset::Custom => "configuration file",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "fig1a" => Preset::Fig1a,
            "fig1b" => Preset::Fig1b,
            "fig1c" => Preset::Fig1c,
            "fig2a" => Preset::Fig2a,
            "fig2b" => Preset::Fig2b,
            "fig2c" => Preset::Fig2c,
            "custom" => Preset::Custom,
            other => return Err(HarnessError::Config(format!("unknown preset {other:?}"))),
        })
    }
}

/// One run of an experiment grid.
#[derive(Debug, Clone)]
pub struct GridPoint {
    /// Directory-safe unique label.
    pub label: String,
    /// Curve family the point belongs to; the summary marks the best point
    /// of each series.
    pub series: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub preset: Preset,
    pub points: Vec<GridPoint>,
}

fn preset_config(delay: DelayVariant, mode: Mode, eta: f64) -> RunConfig {
    let game = GameSource::Generated { n: DEFAULT_N, action_size: DEFAULT_ACTIONS, graph: GraphSpec::Complete };
    let mut c = RunConfig::new(game, DEFAULT_TAU, EtaChoice::Explicit(eta), DEFAULT_HORIZON);
    c.delay = delay;
    c.mode = mode;
    c.seeds = DEFAULT_SEEDS.to_vec();
    c.record_every = PRESET_RECORD_EVERY;
    c.metrics = MetricSet { qre: true, ne_gap: true, regret: false };
    c
}

fn mode_tag(mode: Mode) -> &'static str {
    match mode {
        Mode::Single => "single",
        Mode::TwoTimescale => "two-timescale",
    }
}

fn eta_grid_points(delay: DelayVariant, modes: &[Mode], series_prefix: &str) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for &mode in modes {
        for eta in default_eta_grid() {
            let series = format!("{series_prefix}{}", mode_tag(mode));
            points.push(GridPoint {
                label: format!("{series}_eta{eta:e}"),
                series,
                config: preset_config(delay.clone(), mode, eta),
            });
        }
    }
    points
}

impl ExperimentPlan {
    /// Expands a figure preset. `Custom` needs [`ExperimentPlan::custom`].
    pub fn preset(preset: Preset) -> Result<Self, HarnessError> {
        let both = [Mode::Single, Mode::TwoTimescale];
        let points = match preset {
            Preset::Fig1a => {
                let mut p = eta_grid_points(DelayVariant::None, &[Mode::Single], "sync-");
                p.extend(eta_grid_points(DelayVariant::BoundedUniform { gamma: 10 }, &[Mode::Single], "uniform10-"));
                p
            }
            Preset::Fig1b | Preset::Fig2c => eta_grid_points(DelayVariant::Permuted { gamma: 25 }, &both, ""),
            Preset::Fig2a => eta_grid_points(DelayVariant::BoundedUniform { gamma: 25 }, &both, ""),
            Preset::Fig2b => eta_grid_points(DelayVariant::Fixed { gamma: 50 }, &both, ""),
            Preset::Fig1c => {
                let delay = DelayVariant::Permuted { gamma: 25 };
                let eta = 1e-3;
                let mut p = vec![GridPoint {
                    label: "single_eta1e-3".into(),
                    series: "single".into(),
                    config: preset_config(delay.clone(), Mode::Single, eta),
                }];
                p.push(GridPoint {
                    label: "two-timescale_theory".into(),
                    series: "two-timescale".into(),
                    config: preset_config(delay.clone(), Mode::TwoTimescale, eta),
                });
                for eta_bar in [2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1, 2e-1] {
                    let mut config = preset_config(delay.clone(), Mode::TwoTimescale, eta);
                    config.eta_bar = EtaBarChoice::Explicit(eta_bar);
                    p.push(GridPoint {
                        label: format!("two-timescale_etabar{eta_bar:e}"),
                        series: "two-timescale".into(),
                        config,
                    });
                }
                p
            }
            Preset::Custom => {
                return Err(HarnessError::Config("the custom preset needs a configuration file".into()))
            }
        };
        Ok(ExperimentPlan { preset, points })
    }

    pub fn custom(config: RunConfig) -> Self {
        ExperimentPlan {
            preset: Preset::Custom,
            points: vec![GridPoint { label: "run".into(), series: "run".into(), config }],
        }
    }

    /// Hex SHA-256 over the preset name and every point's label and config hash.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.preset.name().as_bytes());
        for p in &self.points {
            h.update(b"\n");
            h.update(p.label.as_bytes());
            h.update(b"=");
            h.update(p.config.content_hash().as_bytes());
        }
        hex::encode(h.finalize())
    }

    /// `<preset>-<first 12 hex digits of the plan hash>`.
    pub fn dir_name(&self) -> String {
        format!("{}-{}", self.preset.name(), &self.content_hash()[..12])
    }

    pub fn set_jobs(&mut self, jobs: usize) {
        for p in &mut self.points {
            p.config.jobs = jobs;
        }
    }
}

/// Final mean `kl_main` of one grid point.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub series: String,
    pub delay: String,
    pub mode: Mode,
    pub eta: f64,
    pub eta_bar: f64,
    pub final_t: usize,
    pub final_kl_main: Option<f64>,
    /// Lowest final `kl_main` within its series.
    pub best: bool,
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub dir: PathBuf,
    pub summary: Vec<SummaryRow>,
}

/// Runs every point of `plan`, writing `<out>/<dir_name>/<label>/…` per point
/// and `summary.csv` at the top.
pub fn execute_plan(plan: &ExperimentPlan, out: &Path) -> Result<ExperimentResult, HarnessError> {
    let dir = out.join(plan.dir_name());
    std::fs::create_dir_all(&dir)?;
    let mut summary = Vec::with_capacity(plan.points.len());
    for point in &plan.points {
        let run = run_averaged(&point.config)?;
        write_run_dir(&dir.join(&point.label), &point.config, &run)?;
        summary.push(summary_row(point, &run));
    }
    mark_best(&mut summary);
    std::fs::write(dir.join("summary.csv"), summary_csv(&summary))?;
    Ok(ExperimentResult { dir, summary })
}

fn summary_row(point: &GridPoint, run: &AveragedRun) -> SummaryRow {
    let rates = run.per_seed[0].rates;
    SummaryRow {
        label: point.label.clone(),
        series: point.series.clone(),
        delay: point.config.delay.to_string(),
        mode: rates.mode,
        eta: rates.eta,
        eta_bar: rates.eta_bar,
        final_t: run.mean.last().map_or(0, |r| r.t),
        final_kl_main: final_kl(run),
        best: false,
    }
}

fn mark_best(rows: &mut [SummaryRow]) {
    let mut series: Vec<String> = rows.iter().map(|r| r.series.clone()).collect();
    series.dedup();
    for s in series {
        let best = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.series == s)
            .filter_map(|(k, r)| r.final_kl_main.map(|v| (k, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k);
        if let Some(k) = best {
            rows[k].best = true;
        }
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("label,series,delay,mode,eta,eta_bar,final_t,final_kl_main,best\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},\"{}\",{},{:e},{:e},{},{},{}\n",
            r.label,
            r.series,
            r.delay,
            mode_tag(r.mode),
            r.eta,
            r.eta_bar,
            r.final_t,
            r.final_kl_main.map(|v| format!("{v:e}")).unwrap_or_default(),
            r.best
        ));
    }
    s
}

/// `η` as given in a configuration file: a number or `"safe"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Value(f64),
    Named(SafeTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SafeTag {
    Safe,
}

/// JSON mirror of the `run` flags. Every field is optional; unset fields
/// take the defaults of [`FileConfig::to_run_config`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Path to a game file; relative paths resolve against the config file.
    pub game: Option<PathBuf>,
    pub n: Option<usize>,
    pub actions: Option<usize>,
    pub graph: Option<String>,
    pub tau: Option<f64>,
    pub eta: Option<EtaSpec>,
    pub eta_bar: Option<f64>,
    pub two_timescale: Option<bool>,
    /// `none`, `fixed`, `uniform`, `poisson`, `permuted` or `replay`.
    pub delay: Option<String>,
    pub gamma: Option<u32>,
    pub pmean: Option<f64>,
    pub pcap: Option<u32>,
    pub schedule_file: Option<PathBuf>,
    pub horizon: Option<usize>,
    pub record_every: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub jobs: Option<usize>,
    pub regret: Option<bool>,
    pub ne_gap: Option<bool>,
    pub qre_metrics: Option<bool>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl FileConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a configuration file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.game, &mut cfg.schedule_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &FileConfig) {
        overlay!(self, other; game, n, actions, graph, tau, eta, eta_bar, two_timescale, delay, gamma, pmean,
            pcap, schedule_file, horizon, record_every, seeds, jobs, regret, ne_gap, qre_metrics);
    }

    fn delay_variant(&self) -> Result<DelayVariant, HarnessError> {
        let gamma = || self.gamma.ok_or_else(|| HarnessError::Config("this delay model needs gamma".into()));
        Ok(match self.delay.as_deref().unwrap_or("none") {
            "none" => DelayVariant::None,
            "fixed" => DelayVariant::Fixed { gamma: gamma()? },
            "uniform" => DelayVariant::BoundedUniform { gamma: gamma()? },
            "permuted" => DelayVariant::Permuted { gamma: gamma()? },
            "poisson" => DelayVariant::Poisson {
                mean: self.pmean.ok_or_else(|| HarnessError::Config("poisson delays need pmean".into()))?,
                cap: self.pcap,
            },
            "replay" => {
                let path = self
                    .schedule_file
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("replay delays need schedule_file".into()))?;
                let file = std::fs::File::open(path)?;
                let table = ReplayTable::read(std::io::BufReader::new(file))?;
                DelayVariant::Replay { source: path.display().to_string(), table: Arc::new(table) }
            }
            other => return Err(HarnessError::Config(format!("unknown delay model {other:?}"))),
        })
    }

    pub fn to_run_config(&self) -> Result<RunConfig, HarnessError> {
        let game = match &self.game {
            Some(path) => {
                if self.n.is_some() || self.actions.is_some() || self.graph.is_some() {
                    return Err(HarnessError::Config("game file conflicts with n/actions/graph".into()));
                }
                let text = std::fs::read_to_string(path)?;
                GameSource::Fixed(Arc::new(PolymatrixGame::from_json(&text)?))
            }
            None => GameSource::Generated {
                n: self.n.unwrap_or(DEFAULT_N),
                action_size: self.actions.unwrap_or(DEFAULT_ACTIONS),
                graph: self.graph.as_deref().unwrap_or("complete").parse()?,
            },
        };
        let eta = match self.eta {
            None | Some(EtaSpec::Named(SafeTag::Safe)) => EtaChoice::Safe,
            Some(EtaSpec::Value(v)) => EtaChoice::Explicit(v),
        };
        let two = self.two_timescale.unwrap_or(false) || self.eta_bar.is_some();
        let mut c = RunConfig::new(game, self.tau.unwrap_or(DEFAULT_TAU), eta, self.horizon.unwrap_or(DEFAULT_HORIZON));
        c.mode = if two { Mode::TwoTimescale } else { Mode::Single };
        c.eta_bar = self.eta_bar.map_or(EtaBarChoice::Theory, EtaBarChoice::Explicit);
        c.delay = self.delay_variant()?;
        c.record_every = self.record_every.unwrap_or(1);
        c.seeds = self.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec());
        c.jobs = self.jobs.unwrap_or(1).max(1);
        c.metrics = MetricSet {
            qre: self.qre_metrics.unwrap_or(c.tau > 0.0),
            ne_gap: self.ne_gap.unwrap_or(true),
            regret: self.regret.unwrap_or(false),
        };
        c.validate()?;
        Ok(c)
    }
}

/// Parses `0,1,4`, `0..5` or a mix such as `0..3,10`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, HarnessError> {
    let bad = || HarnessError::Config(format!("malformed seed list {s:?}"));
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if a >= b {
                return Err(bad());
            }
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_grid_shape() {
        let g = default_eta_grid();
        assert_eq!(g.len(), 16);
        assert_eq!(&g[..4], &[0.1, 0.05, 0.02, 0.01]);
        assert_eq!(*g.last().unwrap(), 1e-6);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn presets_expand_deterministically() {
        for p in Preset::ALL {
            let a = ExperimentPlan::preset(p).unwrap();
            let b = ExperimentPlan::preset(p).unwrap();
            assert_eq!(a.content_hash(), b.content_hash());
            assert!(a.dir_name().starts_with(p.name()));
            let mut labels: Vec<&str> = a.points.iter().map(|x| x.label.as_str()).collect();
            labels.sort();
            labels.dedup();
            assert_eq!(labels.len(), a.points.len(), "{p}");
        }
        assert!(ExperimentPlan::preset(Preset::Custom).is_err());
        assert_ne!(
            ExperimentPlan::preset(Preset::Fig1b).unwrap().content_hash(),
            ExperimentPlan::preset(Preset::Fig2c).unwrap().content_hash()
        );
    }

    #[test]
    fn fig1c_includes_theory_eta_bar() {
        let plan = ExperimentPlan::preset(Preset::Fig1c).unwrap();
        let theory = plan.points.iter().find(|p| p.label == "two-timescale_theory").unwrap();
        assert_eq!(theory.config.eta_bar, EtaBarChoice::Theory);
        assert_eq!(theory.config.eta, EtaChoice::Explicit(1e-3));
    }

    #[test]
    fn preset_parse_round_trip() {
        for p in Preset::ALL.into_iter().chain([Preset::Custom]) {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig3".parse::<Preset>().is_err());
    }

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seeds("0..5").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_seeds("7, 3,0..2").unwrap(), vec![7, 3, 0, 1]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("5..5").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn file_config_defaults_and_overlay() {
        let mut cfg = FileConfig::from_json(r#"{"delay": "permuted", "gamma": 4, "eta": 0.01, "horizon": 10}"#).unwrap();
        let c = cfg.to_run_config().unwrap();
        assert_eq!(c.delay, DelayVariant::Permuted { gamma: 4 });
        assert_eq!(c.eta, EtaChoice::Explicit(0.01));
        assert_eq!(c.seeds, DEFAULT_SEEDS.to_vec());
        cfg.overlay(&FileConfig { eta: Some(EtaSpec::Named(SafeTag::Safe)), two_timescale: Some(true), ..Default::default() });
        let c = cfg.to_run_config().unwrap();
        assert_eq!(c.eta, EtaChoice::Safe);
        assert_eq!(c.mode, Mode::TwoTimescale);
        assert_eq!(c.horizon, 10);
    }

    #[test]
    fn file_config_errors() {
        assert!(FileConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(FileConfig::from_json(r#"{"delay": "fixed"}"#).unwrap().to_run_config().is_err());
        assert!(FileConfig::from_json(r#"{"delay": "warp", "gamma": 1}"#).unwrap().to_run_config().is_err());
        assert!(FileConfig::from_json(r#"{"tau": 0}"#).unwrap().to_run_config().is_ok());
        assert!(FileConfig::from_json(r#"{"tau": 0, "qre_metrics": true}"#).unwrap().to_run_config().is_err());
    }

    #[test]
    fn custom_plan_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = FileConfig::from_json(r#"{"n": 3, "actions": 2, "eta": 0.05, "horizon": 10, "seeds": [1, 2]}"#).unwrap();
        let plan = ExperimentPlan::custom(cfg.to_run_config().unwrap());
        let res = execute_plan(&plan, dir.path()).unwrap();
        for f in ["run/seed_1.csv", "run/seed_2.csv", "run/seed_1.json", "run/mean.csv", "summary.csv"] {
            assert!(res.dir.join(f).exists(), "{f}");
        }
        let mean = std::fs::read_to_string(res.dir.join("run/mean.csv")).unwrap();
        assert_eq!(mean.lines().count(), 11);
        assert!(res.summary[0].best);
    }
}
