//! Equilibrium metrics: KL divergences, QRE and NE gaps, the QRE reference
//! point and per-player regret.
//!
//! Every inner maximisation over a simplex has a closed form. Against a payoff
//! vector `q`, the best entropy-regularized value is
//! `max_p ⟨p, q⟩ + τH(p) = τ·ln Σ_k exp(q_k/τ)` (attained at `softmax(q/τ)`),
//! and the unregularized one is `max_k q_k`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{safe_rate, AgentState, RateSetting, Regime};
use crate::game::{PolymatrixGame, StrategyProfile};
use crate::numerics::{dot, entropy, scaled_log_sum_exp, softmax};
use crate::MetricError;

/// `Σ_k p(k) ln(p(k)/q(k))` with `0·ln 0 = 0`.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    if p.len() != q.len() {
        return Err(MetricError::LengthMismatch(p.len(), q.len()));
    }
    let mut total = 0.0;
    for (k, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a > 0.0 {
            if !(b > 0.0) {
                return Err(MetricError::InfiniteDivergence { index: k, p: a });
            }
            total += a * (a / b).ln();
        }
    }
    // rounding can leave tiny negatives when p ≈ q
    Ok(total.max(0.0))
}

/// Sum of per-player KL divergences.
pub fn kl_profile(p: &StrategyProfile, q: &StrategyProfile) -> Result<f64, MetricError> {
    if p.players() != q.players() {
        return Err(MetricError::LengthMismatch(p.players(), q.players()));
    }
    p.strategies()
        .iter()
        .zip(q.strategies())
        .map(|(a, b)| kl(a, b))
        .sum()
}

/// Best-response value against payoff vector `q`: `τ·lse(q/τ)` or `max_k q_k`.
pub fn br_value(q: &[f64], tau: f64) -> f64 {
    if tau > 0.0 {
        scaled_log_sum_exp(q, tau)
    } else {
        q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Player `i`'s gain from its best (regularized) unilateral deviation.
fn player_gap(game: &PolymatrixGame, profile: &StrategyProfile, i: usize, tau: f64) -> Result<f64, MetricError> {
    let q = game.payoff_vector(profile, i)?;
    let pi = profile.player(i);
    let current = dot(pi, &q) + if tau > 0.0 { tau * entropy(pi) } else { 0.0 };
    Ok((br_value(&q, tau) - current).max(0.0))
}

/// `max_i [max_{π'_i} u_{i,τ}(π'_i, π_{−i}) − u_{i,τ}(π)]`.
pub fn qre_gap(game: &PolymatrixGame, profile: &StrategyProfile, tau: f64) -> Result<f64, MetricError> {
    if !(tau > 0.0) {
        return Err(MetricError::NonPositiveTau(tau));
    }
    game.check_profile(profile)?;
    (0..game.n()).try_fold(0.0, |m: f64, i| Ok(m.max(player_gap(game, profile, i, tau)?)))
}

/// `max_i [max_k (A_i π)_k − π_iᵀ A_i π]`.
pub fn ne_gap(game: &PolymatrixGame, profile: &StrategyProfile) -> Result<f64, MetricError> {
    game.check_profile(profile)?;
    (0..game.n()).try_fold(0.0, |m: f64, i| Ok(m.max(player_gap(game, profile, i, 0.0)?)))
}

/// `max_i ‖π_i − softmax(A_i π / τ)‖_∞`; zero exactly at the QRE.
pub fn qre_residual(game: &PolymatrixGame, profile: &StrategyProfile, tau: f64) -> Result<f64, MetricError> {
    if !(tau > 0.0) {
        return Err(MetricError::NonPositiveTau(tau));
    }
    game.check_profile(profile)?;
    let mut worst: f64 = 0.0;
    for i in 0..game.n() {
        let scaled: Vec<f64> = game.payoff_vector(profile, i)?.iter().map(|v| v / tau).collect();
        let response = softmax(&scaled);
        for (a, b) in profile.player(i).iter().zip(&response) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// A numerically computed quantal response equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QreSolution {
    pub profile: StrategyProfile,
    pub tau: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Default stopping tolerance for QRE references.
pub const QRE_TOL: f64 = 1e-10;
pub const QRE_MAX_ITER: usize = 2_000_000;

/// Finds the QRE by synchronous single-timescale OMWU from uniform, at
/// `η = min{1/(2τ), 1/(4 d_max ‖A‖∞)}`, stopping once the main iterate's
/// [`qre_residual`] is at most `tol`.
pub fn compute_qre(game: &PolymatrixGame, tau: f64, tol: f64, max_iter: usize) -> Result<QreSolution, MetricError> {
    if !(tau > 0.0) {
        return Err(MetricError::NonPositiveTau(tau));
    }
    if !(tol > 0.0) {
        return Err(MetricError::Game(crate::GameError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        ))));
    }
    let eta = safe_rate(Regime::Sync, &game.stats(), tau)
        .expect("tau > 0 always yields a finite sync rate")
        .eta;
    let rates = RateSetting { mode: crate::Mode::Single, tau, eta, eta_bar: eta };
    let mut agents: Vec<AgentState> = game.action_sizes().iter().map(|&m| AgentState::uniform(m, &rates)).collect();
    let mut extrap: Vec<Vec<f64>> = agents.iter().map(AgentState::extrap).collect();
    let mut feedback: Vec<Vec<f64>> = game.action_sizes().iter().map(|&m| vec![0.0; m]).collect();
    let mut best = f64::INFINITY;

    for t in 0..=max_iter {
        for (i, f) in feedback.iter_mut().enumerate() {
            f.iter_mut().for_each(|v| *v = 0.0);
            game.accumulate_payoff(i, |j| &extrap[j], f);
        }
        if t >= 1 {
            for (i, agent) in agents.iter_mut().enumerate() {
                agent.update_main(&feedback[i], tau).expect("finite feedback");
            }
        }
        let main = StrategyProfile::from_normalized(agents.iter().map(AgentState::main).collect());
        let residual = qre_residual(game, &main, tau)?;
        best = best.min(residual);
        if residual <= tol {
            return Ok(QreSolution { profile: main, tau, residual, iterations: t });
        }
        for (i, agent) in agents.iter_mut().enumerate() {
            agent.update_extrap(&feedback[i], tau).expect("finite feedback");
            extrap[i] = agent.extrap();
        }
    }
    Err(MetricError::QreNotConverged { iterations: max_iter, residual: best })
}

/// Upper bound on the QRE gap in terms of the two KL divergences to the QRE:
/// `τ·KL(π‖π*) + (d_max² ‖A‖∞²/τ)·KL(π*‖π)`.
pub fn qre_gap_kl_bound(
    game: &PolymatrixGame,
    profile: &StrategyProfile,
    qre: &QreSolution,
    tau: f64,
) -> Result<f64, MetricError> {
    if !(tau > 0.0) {
        return Err(MetricError::NonPositiveTau(tau));
    }
    let s = game.stats();
    let da = s.d_max as f64 * s.a_inf;
    let forward = kl_profile(profile, &qre.profile)?;
    let backward = if da > 0.0 { kl_profile(&qre.profile, profile)? } else { 0.0 };
    Ok(tau * forward + da * da / tau * backward)
}

/// Player `i`'s regret over `history = [π̄^(1), …, π̄^(T)]`.
///
/// The hindsight comparator is exact: with `v = Σ_t A_i π̄^(t)` it is
/// `Tτ·ln Σ_k exp(v_k/(Tτ))` for `τ > 0` and `max_k v_k` for `τ = 0`.
pub fn regret(game: &PolymatrixGame, history: &[StrategyProfile], i: usize, tau: f64) -> Result<f64, MetricError> {
    if history.is_empty() {
        return Err(MetricError::EmptyHistory);
    }
    if !(tau >= 0.0) {
        return Err(MetricError::NonPositiveTau(tau));
    }
    let mut v = vec![0.0; game.action_sizes().get(i).copied().unwrap_or(0)];
    let mut realized = 0.0;
    for profile in history {
        let q = game.payoff_vector(profile, i)?;
        v.iter_mut().zip(&q).for_each(|(a, b)| *a += b);
        realized += game.utility(profile, i, tau)?;
    }
    let horizon = history.len() as f64;
    let best = if tau > 0.0 { scaled_log_sum_exp(&v, horizon * tau) } else { br_value(&v, 0.0) };
    Ok(best - realized)
}

/// Per-player regrets at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub regrets: Vec<f64>,
    pub tau: f64,
    pub horizon: usize,
}

impl RegretReport {
    pub fn compute(game: &PolymatrixGame, history: &[StrategyProfile], tau: f64) -> Result<Self, MetricError> {
        let regrets = (0..game.n()).map(|i| regret(game, history, i, tau)).collect::<Result<_, _>>()?;
        Ok(RegretReport { regrets, tau, horizon: history.len() })
    }

    pub fn total(&self) -> f64 {
        self.regrets.iter().sum()
    }
}

/// Running regret over a growing history, O(Σ|S_i|) memory.
#[derive(Debug, Clone)]
pub struct RegretTracker {
    tau: f64,
    cumulative_payoff: Vec<Vec<f64>>,
    realized: Vec<f64>,
    horizon: usize,
}

impl RegretTracker {
    pub fn new(action_sizes: &[usize], tau: f64) -> Self {
        RegretTracker {
            tau,
            cumulative_payoff: action_sizes.iter().map(|&m| vec![0.0; m]).collect(),
            realized: vec![0.0; action_sizes.len()],
            horizon: 0,
        }
    }

    /// Appends `π̄^(t)`; `payoffs[i]` must be `A_i π̄^(t)`.
    pub fn push(&mut self, strategies: &[Vec<f64>], payoffs: &[Vec<f64>]) {
        for (i, q) in payoffs.iter().enumerate() {
            let pi = &strategies[i];
            self.cumulative_payoff[i].iter_mut().zip(q).for_each(|(a, b)| *a += b);
            self.realized[i] += dot(pi, q) + if self.tau > 0.0 { self.tau * entropy(pi) } else { 0.0 };
        }
        self.horizon += 1;
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Current regrets; zeros before the first push.
    pub fn regrets(&self) -> Vec<f64> {
        if self.horizon == 0 {
            return vec![0.0; self.realized.len()];
        }
        let scale = self.horizon as f64 * self.tau;
        self.cumulative_payoff
            .iter()
            .zip(&self.realized)
            .map(|(v, r)| {
                let best = if self.tau > 0.0 { scaled_log_sum_exp(v, scale) } else { br_value(v, 0.0) };
                best - r
            })
            .collect()
    }
}
