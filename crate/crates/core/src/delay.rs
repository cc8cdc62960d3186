//! Feedback-delay schedules.
//!
//! At iteration `t` agent `i` observes the payoff of the extrapolation
//! profile from iteration `κ_i^(t) = max{t − γ_i^(t), 0}`. A [`DelaySchedule`]
//! produces these indices for every agent, one call per `(i, t)` in
//! increasing `t`, from per-agent random substreams of the run seed.
//!
//! The permuted variant delivers every index `s ≥ 1` exactly once with
//! displacement at most `γ`. Each agent keeps the set of undelivered indices
//! in `[t − γ, t]`; the oldest one is delivered when it reaches age `γ`,
//! otherwise a uniformly random member is. Before `t = γ` the stale index 0
//! is also a candidate, which is what lets later deliveries be reordered.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::rng::{substream, Purpose};
use crate::DelayError;

/// Explicit `κ` values loaded from a permutation file, indexed `[agent][t]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayTable {
    kappas: Vec<Vec<Option<usize>>>,
}

impl ReplayTable {
    /// Parses whitespace-separated `i t κ` triples, one per line. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, DelayError> {
        let mut kappas: Vec<Vec<Option<usize>>> = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| DelayError::Parse { line: n + 1, msg: msg.to_string() };
            let fields: Vec<usize> = line
                .split_whitespace()
                .map(|f| f.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| err("expected three nonnegative integers"))?;
            let [agent, t, kappa] = fields[..] else {
                return Err(err("expected three nonnegative integers"));
            };
            if kappa > t {
                return Err(err("kappa exceeds t"));
            }
            if kappas.len() <= agent {
                kappas.resize(agent + 1, Vec::new());
            }
            let row = &mut kappas[agent];
            if row.len() <= t {
                row.resize(t + 1, None);
            }
            if row[t].replace(kappa).is_some() {
                return Err(err("duplicate (agent, t) entry"));
            }
        }
        Ok(ReplayTable { kappas })
    }

    pub fn get(&self, agent: usize, t: usize) -> Option<usize> {
        self.kappas.get(agent)?.get(t).copied().flatten()
    }

    pub fn agents(&self) -> usize {
        self.kappas.len()
    }

    /// Largest `t − κ` in the table.
    pub fn max_displacement(&self) -> usize {
        self.kappas
            .iter()
            .flat_map(|row| row.iter().enumerate().filter_map(|(t, k)| k.map(|k| t - k)))
            .max()
            .unwrap_or(0)
    }
}

/// How delays are generated. All agents of a run share one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DelayVariant {
    /// `κ = t`.
    None,
    /// `κ = max{t − γ, 0}`.
    Fixed { gamma: u32 },
    /// Delay uniform on `{0, …, γ}`.
    BoundedUniform { gamma: u32 },
    /// Poisson delay with the given mean, optionally truncated at `cap`.
    Poisson { mean: f64, cap: Option<u32> },
    /// Each index `s ≥ 1` delivered once, displacement at most `γ`.
    Permuted { gamma: u32 },
    /// Indices read from a permutation file.
    Replay {
        source: String,
        #[serde(skip)]
        table: Arc<ReplayTable>,
    },
}

impl DelayVariant {
    pub fn name(&self) -> &'static str {
        match self {
            DelayVariant::None => "none",
            DelayVariant::Fixed { .. } => "fixed",
            DelayVariant::BoundedUniform { .. } => "uniform",
            DelayVariant::Poisson { .. } => "poisson",
            DelayVariant::Permuted { .. } => "permuted",
            DelayVariant::Replay { .. } => "replay",
        }
    }

    /// Bound on `t − κ`, if the variant has one.
    pub fn max_delay(&self) -> Option<usize> {
        match self {
            DelayVariant::None => Some(0),
            DelayVariant::Fixed { gamma }
            | DelayVariant::BoundedUniform { gamma }
            | DelayVariant::Permuted { gamma } => Some(*gamma as usize),
            DelayVariant::Poisson { cap, .. } => cap.map(|c| c as usize),
            DelayVariant::Replay { table, .. } => Some(table.max_displacement()),
        }
    }

    fn validate(&self) -> Result<(), DelayError> {
        if let DelayVariant::Poisson { mean, .. } = self {
            if !(*mean > 0.0) || !mean.is_finite() {
                return Err(DelayError::InvalidParameter(format!("Poisson mean must be positive, got {mean}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for DelayVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelayVariant::None => write!(f, "none"),
            DelayVariant::Fixed { gamma } => write!(f, "fixed(γ={gamma})"),
            DelayVariant::BoundedUniform { gamma } => write!(f, "uniform(γ={gamma})"),
            DelayVariant::Poisson { mean, cap: None } => write!(f, "poisson(mean={mean})"),
            DelayVariant::Poisson { mean, cap: Some(c) } => write!(f, "poisson(mean={mean}, cap={c})"),
            DelayVariant::Permuted { gamma } => write!(f, "permuted(γ={gamma})"),
            DelayVariant::Replay { source, .. } => write!(f, "replay({source})"),
        }
    }
}

/// Tail constants of a random delay distribution.
///
/// `zeta` and `l` satisfy `Σ_ℓ ζ^ℓ E(ℓ) ≤ L` where `E(ℓ)` bounds
/// `E[γ·1{γ ≥ ℓ}]`; `sigma2` bounds `Σ_ℓ E(ℓ) = E[γ(γ+1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayConstants {
    pub zeta: f64,
    pub l: f64,
    pub sigma2: f64,
}

impl DelayConstants {
    /// Delays bounded by `γ ≥ 1`: `ζ = 1 + 1/γ`, `L = eγ(γ+1)`, `σ² = γ(γ+1)`.
    pub fn bounded(gamma: u32) -> Result<Self, DelayError> {
        if gamma == 0 {
            return Err(DelayError::InvalidParameter("bounded delay constants need gamma >= 1".into()));
        }
        let g = gamma as f64;
        Ok(DelayConstants { zeta: 1.0 + 1.0 / g, l: std::f64::consts::E * g * (g + 1.0), sigma2: g * (g + 1.0) })
    }

    /// Poisson delays with mean `T̄`: `ζ = 1 + 1/T̄`, `L = eT̄(1+T̄)`,
    /// `σ² = E[γ(γ+1)] = T̄² + 2T̄`.
    pub fn poisson(mean: f64) -> Result<Self, DelayError> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(DelayError::InvalidParameter(format!("Poisson mean must be positive, got {mean}")));
        }
        Ok(DelayConstants {
            zeta: 1.0 + 1.0 / mean,
            l: std::f64::consts::E * mean * (1.0 + mean),
            sigma2: mean * mean + 2.0 * mean,
        })
    }
}

pub fn delay_constants(variant: &DelayVariant) -> Result<DelayConstants, DelayError> {
    match variant {
        DelayVariant::BoundedUniform { gamma } => DelayConstants::bounded(*gamma),
        DelayVariant::Poisson { mean, .. } => DelayConstants::poisson(*mean),
        other => Err(DelayError::NoConstants(other.name())),
    }
}

#[derive(Debug, Clone)]
struct AgentDelays {
    rng: ChaCha20Rng,
    next_t: usize,
    /// Undelivered indices for the permuted variant.
    pending: Vec<usize>,
}

/// Stateful per-run generator of `κ_i^(t)`.
#[derive(Debug, Clone)]
pub struct DelaySchedule {
    variant: DelayVariant,
    poisson: Option<Poisson<f64>>,
    agents: Vec<AgentDelays>,
}

impl DelaySchedule {
    pub fn new(variant: DelayVariant, n_agents: usize, seed: u64) -> Result<Self, DelayError> {
        variant.validate()?;
        let poisson = match &variant {
            DelayVariant::Poisson { mean, .. } => Some(
                Poisson::new(*mean).map_err(|e| DelayError::InvalidParameter(e.to_string()))?,
            ),
            _ => None,
        };
        let agents = (0..n_agents)
            .map(|i| AgentDelays { rng: substream(seed, Purpose::Delay, i as u64), next_t: 0, pending: Vec::new() })
            .collect();
        Ok(DelaySchedule { variant, poisson, agents })
    }

    pub fn variant(&self) -> &DelayVariant {
        &self.variant
    }

    /// `κ_i^(t)`. Must be called exactly once per agent for `t = 0, 1, 2, …`.
    pub fn next_kappa(&mut self, i: usize, t: usize) -> Result<usize, DelayError> {
        let state = self.agents.get_mut(i).ok_or(DelayError::AgentOutOfRange(i))?;
        if t != state.next_t {
            return Err(DelayError::OutOfOrder { agent: i, expected: state.next_t, got: t });
        }
        state.next_t += 1;
        let kappa = match &self.variant {
            DelayVariant::None => t,
            DelayVariant::Fixed { gamma } => t.saturating_sub(*gamma as usize),
            DelayVariant::BoundedUniform { gamma } => {
                let u = state.rng.random_range(0..=*gamma as usize);
                t.saturating_sub(u)
            }
            DelayVariant::Poisson { cap, .. } => {
                let draw = self.poisson.as_ref().expect("constructed with variant").sample(&mut state.rng);
                let mut delay = draw as usize;
                if let Some(c) = cap {
                    delay = delay.min(*c as usize);
                }
                t.saturating_sub(delay)
            }
            DelayVariant::Permuted { gamma } => permuted_next(state, t, *gamma as usize),
            DelayVariant::Replay { table, .. } => {
                table.get(i, t).ok_or(DelayError::MissingReplay { agent: i, t })?
            }
        };
        debug_assert!(kappa <= t);
        Ok(kappa)
    }
}

fn permuted_next(state: &mut AgentDelays, t: usize, gamma: usize) -> usize {
    if t >= 1 {
        state.pending.push(t);
    }
    if t > gamma {
        let oldest = t - gamma;
        if let Some(pos) = state.pending.iter().position(|&s| s == oldest) {
            return state.pending.swap_remove(pos);
        }
    }
    let filler = usize::from(t < gamma);
    let choices = state.pending.len() + filler;
    if choices == 0 {
        return 0;
    }
    let pick = state.rng.random_range(0..choices);
    if pick == state.pending.len() {
        0
    } else {
        state.pending.swap_remove(pick)
    }
}

/// Result of replaying one agent's schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub variant: String,
    pub agent: usize,
    pub horizon: usize,
    pub max_displacement: usize,
    pub mean_delay: f64,
    /// `t − κ ≤ bound` was required for `t ≥ bound`.
    pub displacement_bound: Option<usize>,
    pub displacement_violations: usize,
    /// Indices `≥ 1` emitted more than once (only a violation for permuted).
    pub duplicates: Vec<usize>,
    /// Indices in `[1, T − γ − 1]` never emitted (permuted only).
    pub missing: Vec<usize>,
    pub passed: bool,
}

/// Replays agent `i` of a fresh schedule for `t = 0..horizon` and checks the
/// variant's invariants.
pub fn validate_schedule(
    variant: &DelayVariant,
    n_agents: usize,
    seed: u64,
    horizon: usize,
    agent: usize,
) -> Result<ScheduleReport, DelayError> {
    let mut schedule = DelaySchedule::new(variant.clone(), n_agents, seed)?;
    let mut kappas = Vec::with_capacity(horizon);
    for t in 0..horizon {
        // other agents are not advanced; each agent's stream is independent
        kappas.push(schedule.next_kappa(agent, t)?);
    }
    Ok(check_kappas(variant, agent, &kappas))
}

fn check_kappas(variant: &DelayVariant, agent: usize, kappas: &[usize]) -> ScheduleReport {
    let horizon = kappas.len();
    // Poisson caps and replay tables are not contractual bounds
    let bound = match variant {
        DelayVariant::Poisson { .. } | DelayVariant::Replay { .. } => None,
        _ => variant.max_delay(),
    };
    let mut max_displacement = 0;
    let mut total_delay = 0usize;
    let mut violations = 0;
    let mut seen = HashSet::new();
    let mut duplicates = Vec::new();
    for (t, &k) in kappas.iter().enumerate() {
        let d = t.saturating_sub(k);
        if k > t {
            violations += 1;
        }
        max_displacement = max_displacement.max(d);
        total_delay += d;
        if let Some(b) = bound {
            if t >= b && d > b {
                violations += 1;
            }
        }
        if k >= 1 && !seen.insert(k) {
            duplicates.push(k);
        }
    }
    let permuted = matches!(variant, DelayVariant::Permuted { .. });
    let missing = match variant {
        DelayVariant::Permuted { gamma } => {
            let last = horizon.saturating_sub(*gamma as usize + 1);
            (1..last.max(1)).filter(|s| !seen.contains(s)).collect()
        }
        _ => Vec::new(),
    };
    let passed = violations == 0 && (!permuted || (duplicates.is_empty() && missing.is_empty()));
    ScheduleReport {
        variant: variant.to_string(),
        agent,
        horizon,
        max_displacement,
        mean_delay: if horizon > 0 { total_delay as f64 / horizon as f64 } else { 0.0 },
        displacement_bound: bound,
        displacement_violations: violations,
        duplicates,
        missing,
        passed,
    }
}

/// Writes every agent's `κ_i^(t)` for `t < horizon` as `i t κ` lines.
pub fn write_permutation_file<W: Write>(
    variant: &DelayVariant,
    n_agents: usize,
    seed: u64,
    horizon: usize,
    mut out: W,
) -> Result<(), DelayError> {
    let mut schedule = DelaySchedule::new(variant.clone(), n_agents, seed)?;
    for t in 0..horizon {
        for i in 0..n_agents {
            writeln!(out, "{i} {t} {}", schedule.next_kappa(i, t)?)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kappas(variant: DelayVariant, horizon: usize, seed: u64) -> Vec<usize> {
        let mut s = DelaySchedule::new(variant, 1, seed).unwrap();
        (0..horizon).map(|t| s.next_kappa(0, t).unwrap()).collect()
    }

    #[test]
    fn none_and_fixed() {
        assert_eq!(kappas(DelayVariant::None, 8, 0)[7], 7);
        let k = kappas(DelayVariant::Fixed { gamma: 3 }, 11, 0);
        assert_eq!(k[10], 7);
        assert_eq!(k[2], 0);
    }

    #[test]
    fn permuted_without_slack_is_identity() {
        let k = kappas(DelayVariant::Permuted { gamma: 0 }, 50, 9);
        assert_eq!(k, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn permuted_actually_reorders() {
        let k = kappas(DelayVariant::Permuted { gamma: 5 }, 200, 1);
        let late: Vec<usize> = k.iter().copied().filter(|&x| x >= 1).collect();
        assert!(late.windows(2).any(|w| w[0] > w[1]));
    }

    #[test]
    fn out_of_order_calls_are_rejected() {
        let mut s = DelaySchedule::new(DelayVariant::None, 2, 0).unwrap();
        s.next_kappa(0, 0).unwrap();
        assert!(matches!(s.next_kappa(0, 2), Err(DelayError::OutOfOrder { agent: 0, expected: 1, got: 2 })));
        assert!(matches!(s.next_kappa(1, 1), Err(DelayError::OutOfOrder { .. })));
        assert!(matches!(s.next_kappa(2, 0), Err(DelayError::AgentOutOfRange(2))));
    }

    #[test]
    fn constants() {
        let c = delay_constants(&DelayVariant::BoundedUniform { gamma: 25 }).unwrap();
        assert!((c.zeta - 1.04).abs() < 1e-15);
        assert!((c.l - std::f64::consts::E * 650.0).abs() < 1e-12);
        assert!((c.l - 1766.86).abs() < 0.05);
        assert_eq!(c.sigma2, 650.0);
        let c = delay_constants(&DelayVariant::BoundedUniform { gamma: 1 }).unwrap();
        assert_eq!(c.zeta, 2.0);
        assert!((c.l - 5.43656).abs() < 1e-5);
        let c = delay_constants(&DelayVariant::Poisson { mean: 1.0, cap: None }).unwrap();
        assert_eq!(c.zeta, 2.0);
        assert!((c.l - 2.0 * std::f64::consts::E).abs() < 1e-15);
        assert!(matches!(delay_constants(&DelayVariant::Fixed { gamma: 3 }), Err(DelayError::NoConstants("fixed"))));
        assert!(delay_constants(&DelayVariant::None).is_err());
        assert!(delay_constants(&DelayVariant::Permuted { gamma: 2 }).is_err());
        assert!(delay_constants(&DelayVariant::BoundedUniform { gamma: 0 }).is_err());
    }

    #[test]
    fn fixed_schedule_report() {
        let r = validate_schedule(&DelayVariant::Fixed { gamma: 50 }, 3, 0, 400, 1).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_displacement, 50);
    }

    #[test]
    fn poisson_rejects_bad_mean_and_respects_cap() {
        assert!(DelaySchedule::new(DelayVariant::Poisson { mean: 0.0, cap: None }, 1, 0).is_err());
        let k = kappas(DelayVariant::Poisson { mean: 4.0, cap: Some(2) }, 500, 3);
        assert!(k.iter().enumerate().all(|(t, &x)| t - x <= 2));
    }

    #[test]
    fn replay_round_trip() {
        let v = DelayVariant::Permuted { gamma: 4 };
        let mut buf = Vec::new();
        write_permutation_file(&v, 2, 7, 30, &mut buf).unwrap();
        let table = Arc::new(ReplayTable::read(&buf[..]).unwrap());
        assert_eq!(table.agents(), 2);
        assert!(table.max_displacement() <= 4);
        let replay = DelayVariant::Replay { source: "mem".into(), table };
        let mut a = DelaySchedule::new(v, 2, 7).unwrap();
        let mut b = DelaySchedule::new(replay.clone(), 2, 0).unwrap();
        for t in 0..30 {
            for i in 0..2 {
                assert_eq!(a.next_kappa(i, t).unwrap(), b.next_kappa(i, t).unwrap());
            }
        }
        assert!(matches!(b.next_kappa(0, 30), Err(DelayError::MissingReplay { agent: 0, t: 30 })));
    }

    #[test]
    fn replay_parse_errors() {
        assert!(matches!(ReplayTable::read(&b"0 1 2\n"[..]), Err(DelayError::Parse { line: 1, .. })));
        assert!(ReplayTable::read(&b"0 1\n"[..]).is_err());
        assert!(ReplayTable::read(&b"0 1 1\n0 1 0\n"[..]).is_err());
        let t = ReplayTable::read(&b"# header\n\n0 0 0\n"[..]).unwrap();
        assert_eq!(t.get(0, 0), Some(0));
    }

    #[test]
    fn replay_report_flags_duplicates_only_for_permuted() {
        let r = check_kappas(&DelayVariant::Permuted { gamma: 2 }, 0, &[0, 1, 1, 3, 4, 5]);
        assert!(!r.passed);
        assert_eq!(r.duplicates, vec![1]);
        assert_eq!(r.missing, vec![2]);
        let r = check_kappas(&DelayVariant::BoundedUniform { gamma: 2 }, 0, &[0, 1, 1, 3, 4, 5]);
        assert!(r.passed);
    }
}
