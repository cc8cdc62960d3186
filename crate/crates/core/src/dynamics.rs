//! The OMWU update kernel and learning-rate schedules.
//!
//! Strategies live in log space. One kernel, [`mwu_step`], covers both the
//! main update and the extrapolation update; the two differ only in which
//! logits they start from and which rate they use.

use serde::{Deserialize, Serialize};

use crate::delay::DelayConstants;
use crate::game::GameStats;
use crate::numerics::{log_sum_exp, softmax};
use crate::RateError;

/// Slack on `rate·τ ≤ 1` for rates computed in floating point.
const RATE_TAU_SLACK: f64 = 1e-12;

fn check_step_inputs(logits: &[f64], feedback: &[f64], rate: f64, tau: f64) -> Result<(), RateError> {
    if logits.len() != feedback.len() {
        return Err(RateError::LengthMismatch(logits.len(), feedback.len()));
    }
    if let Some(k) = feedback.iter().position(|v| !v.is_finite()) {
        return Err(RateError::NonFiniteFeedback(k));
    }
    if !(rate > 0.0) {
        return Err(RateError::NonPositiveRate(rate));
    }
    if rate * tau > 1.0 + RATE_TAU_SLACK {
        return Err(RateError::RateTooLarge(rate * tau));
    }
    Ok(())
}

/// `(1 − rate·τ)·logits + rate·feedback`, re-centred so that the result is an
/// exact log-probability vector.
///
/// Multiplicatively this is `p(k) ∝ p(k)^{1−rate·τ} · exp(rate·feedback_k)`.
pub fn mwu_step(logits: &[f64], feedback: &[f64], rate: f64, tau: f64) -> Result<Vec<f64>, RateError> {
    check_step_inputs(logits, feedback, rate, tau)?;
    let mut out = vec![0.0; logits.len()];
    step_unchecked(logits, feedback, rate, tau, &mut out);
    Ok(out)
}

fn step_unchecked(logits: &[f64], feedback: &[f64], rate: f64, tau: f64, out: &mut [f64]) {
    let keep = (1.0 - rate * tau).max(0.0);
    for ((o, &l), &f) in out.iter_mut().zip(logits).zip(feedback) {
        *o = keep * l + rate * f;
    }
    let z = log_sum_exp(out);
    out.iter_mut().for_each(|o| *o -= z);
}

/// Softmax with max shift.
pub fn normalize(logits: &[f64]) -> Vec<f64> {
    softmax(logits)
}

/// Extrapolation rate `η̄` solving `1 − η̄τ = (1 − ητ)^{γ+1}`; `(γ+1)η` at `τ = 0`.
pub fn two_timescale_rate(eta: f64, tau: f64, gamma: u32) -> f64 {
    if tau == 0.0 {
        return (gamma as f64 + 1.0) * eta;
    }
    // -expm1((γ+1)·ln(1−ητ)) keeps full precision when ητ is tiny
    -((gamma as f64 + 1.0) * (-eta * tau).ln_1p()).exp_m1() / tau
}

/// Single- or two-timescale extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    TwoTimescale,
}

/// Learning rates for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSetting {
    pub mode: Mode,
    pub tau: f64,
    pub eta: f64,
    pub eta_bar: f64,
}

impl RateSetting {
    pub fn single(eta: f64, tau: f64) -> Result<Self, RateError> {
        RateSetting { mode: Mode::Single, tau, eta, eta_bar: eta }.validated()
    }

    /// Two-timescale rates with `η̄` from [`two_timescale_rate`].
    pub fn two_timescale(eta: f64, tau: f64, gamma: u32) -> Result<Self, RateError> {
        let eta_bar = two_timescale_rate(eta, tau, gamma);
        RateSetting { mode: Mode::TwoTimescale, tau, eta, eta_bar }.validated()
    }

    /// Two-timescale rates with an explicit `η̄ ≥ η`.
    pub fn with_eta_bar(eta: f64, eta_bar: f64, tau: f64) -> Result<Self, RateError> {
        RateSetting { mode: Mode::TwoTimescale, tau, eta, eta_bar }.validated()
    }

    pub fn validated(self) -> Result<Self, RateError> {
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(RateError::Mismatch { regime: "rate setting", what: "a finite tau >= 0" });
        }
        for r in [self.eta, self.eta_bar] {
            if !(r > 0.0) || !r.is_finite() {
                return Err(RateError::NonPositiveRate(r));
            }
            if r * self.tau >= 1.0 {
                return Err(RateError::RateTooLarge(r * self.tau));
            }
        }
        match self.mode {
            Mode::Single if self.eta_bar != self.eta => {
                Err(RateError::Mismatch { regime: "single-timescale", what: "eta_bar == eta" })
            }
            Mode::TwoTimescale if self.eta_bar < self.eta => {
                Err(RateError::Mismatch { regime: "two-timescale", what: "eta_bar >= eta" })
            }
            _ => Ok(self),
        }
    }
}

/// Per-player iterate pair in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub main_logits: Vec<f64>,
    pub extrap_logits: Vec<f64>,
    pub eta: f64,
    pub eta_bar: f64,
}

impl AgentState {
    /// Uniform `π_i^(0) = π̄_i^(0)`.
    pub fn uniform(actions: usize, rates: &RateSetting) -> Self {
        let l = -(actions as f64).ln();
        AgentState {
            main_logits: vec![l; actions],
            extrap_logits: vec![l; actions],
            eta: rates.eta,
            eta_bar: rates.eta_bar,
        }
    }

    pub fn main(&self) -> Vec<f64> {
        normalize(&self.main_logits)
    }

    pub fn extrap(&self) -> Vec<f64> {
        normalize(&self.extrap_logits)
    }

    /// Main update `π^(t−1) → π^(t)` with this iteration's feedback. Only
    /// called for `t ≥ 1`.
    pub fn update_main(&mut self, feedback: &[f64], tau: f64) -> Result<(), RateError> {
        check_step_inputs(&self.main_logits, feedback, self.eta, tau)?;
        let prev = std::mem::take(&mut self.main_logits);
        self.main_logits = vec![0.0; prev.len()];
        step_unchecked(&prev, feedback, self.eta, tau, &mut self.main_logits);
        Ok(())
    }

    /// Extrapolation `π^(t) → π̄^(t+1)` with the same feedback as the main update.
    pub fn update_extrap(&mut self, feedback: &[f64], tau: f64) -> Result<(), RateError> {
        check_step_inputs(&self.main_logits, feedback, self.eta_bar, tau)?;
        step_unchecked(&self.main_logits, feedback, self.eta_bar, tau, &mut self.extrap_logits);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.main_logits.iter().chain(&self.extrap_logits).all(|v| v.is_finite())
    }
}

/// Delay regime a safe learning rate is requested for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// No delay: `η ≤ min{1/(2τ), 1/(4 d a)}`.
    Sync,
    /// No delay, no-regret cap: `η ≤ 1/(4 d a + 4τ)`.
    SyncRegret,
    /// Random delays with tail constants: `η ≤ min{τ/(24 d² a² (L+1)), (ζ−1)/(τζ)}`.
    RandomDelay(DelayConstants),
    /// Fixed known delay, two-timescale: `η ≤ min{1/(2τ(γ+1)), 1/(5 d a (γ+1)²)}`.
    FixedDelay { gamma: u32 },
    /// Permuted bounded delay, two-timescale:
    /// `η ≤ min{1/(2τ(γ+1)), 1/(28 d a (γ+1)^{5/2})}`.
    Permuted { gamma: u32 },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Sync => "sync",
            Regime::SyncRegret => "sync-regret",
            Regime::RandomDelay(_) => "random-delay",
            Regime::FixedDelay { .. } => "fixed-delay",
            Regime::Permuted { .. } => "permuted",
        }
    }
}

/// Largest rates permitted by the convergence bound for `regime`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafeRate {
    pub eta: f64,
    /// Equal to `eta` for single-timescale regimes.
    pub eta_bar: f64,
}

fn min_finite(a: f64, b: f64) -> Result<f64, RateError> {
    let m = a.min(b);
    if m.is_finite() {
        Ok(m)
    } else {
        Err(RateError::Unbounded)
    }
}

fn inv(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

pub fn safe_rate(regime: Regime, stats: &GameStats, tau: f64) -> Result<SafeRate, RateError> {
    if !(tau >= 0.0) {
        return Err(RateError::Mismatch { regime: regime.name(), what: "tau >= 0" });
    }
    let da = stats.d_max as f64 * stats.a_inf;
    let single = |eta| SafeRate { eta, eta_bar: eta };
    match regime {
        Regime::Sync => Ok(single(min_finite(inv(2.0 * tau), inv(4.0 * da))?)),
        Regime::SyncRegret => Ok(single(min_finite(inv(4.0 * da + 4.0 * tau), f64::INFINITY)?)),
        Regime::RandomDelay(c) => {
            if !(tau > 0.0) {
                return Err(RateError::Mismatch { regime: regime.name(), what: "tau > 0" });
            }
            let delay_term = inv(24.0 * da * da * (c.l + 1.0)) * tau;
            let tail_term = (c.zeta - 1.0) / (tau * c.zeta);
            Ok(single(min_finite(delay_term, tail_term)?))
        }
        Regime::FixedDelay { gamma } | Regime::Permuted { gamma } => {
            if !(tau > 0.0) {
                return Err(RateError::Mismatch { regime: regime.name(), what: "tau > 0" });
            }
            let g1 = gamma as f64 + 1.0;
            let game_term = match regime {
                Regime::FixedDelay { .. } => inv(5.0 * da * g1 * g1),
                _ => inv(28.0 * da * g1.powf(2.5)),
            };
            let eta = min_finite(inv(2.0 * tau * g1), game_term)?;
            Ok(SafeRate { eta, eta_bar: two_timescale_rate(eta, tau, gamma) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spread(l: &[f64]) -> f64 {
        let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = l.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    #[test]
    fn zero_feedback_without_regularization_keeps_distribution() {
        let l = vec![0.3, -1.0, 2.0];
        let out = mwu_step(&l, &[0.0; 3], 0.7, 0.0).unwrap();
        let (p, q) = (normalize(&l), normalize(&out));
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-15);
        }
        // shift only
        let d = out[0] - l[0];
        assert!(out.iter().zip(&l).all(|(o, x)| (o - x - d).abs() < 1e-14));
    }

    #[test]
    fn full_regularization_forgets_prior_logits() {
        let f = [0.4, -0.2, 1.0];
        let a = mwu_step(&[5.0, -3.0, 0.0], &f, 2.0, 0.5).unwrap();
        let b = mwu_step(&[0.0, 0.0, 0.0], &f, 2.0, 0.5).unwrap();
        let expect: Vec<f64> = normalize(&[0.8, -0.4, 2.0]).iter().map(|p| p.ln()).collect();
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-14);
            assert!((a[k] - expect[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn step_matches_softmax_of_half_feedback() {
        let l = vec![-(2f64).ln(); 2];
        let p = normalize(&mwu_step(&l, &[1.0, -1.0], 0.5, 0.0).unwrap());
        // softmax(0.5, -0.5) = 1/(1+e^{-1})
        let expect = 1.0 / (1.0 + (-1f64).exp());
        assert!((p[0] - expect).abs() < 1e-15);
        assert!((p[0] - 0.731_059).abs() < 1e-6);
        assert!((p[1] - 0.268_941).abs() < 1e-6);
    }

    #[test]
    fn step_rejects_bad_input() {
        assert!(matches!(mwu_step(&[0.0], &[f64::NAN], 0.1, 0.0), Err(RateError::NonFiniteFeedback(0))));
        assert!(matches!(mwu_step(&[0.0, 0.0], &[0.0], 0.1, 0.0), Err(RateError::LengthMismatch(2, 1))));
        assert!(matches!(mwu_step(&[0.0], &[0.0], 3.0, 0.5), Err(RateError::RateTooLarge(_))));
        assert!(mwu_step(&[0.0], &[0.0], 0.0, 0.5).is_err());
    }

    #[test]
    fn regularized_zero_feedback_contracts_spread() {
        let l = vec![1.0, -2.0, 0.5, 3.0];
        let out = mwu_step(&l, &[0.0; 4], 0.3, 0.5).unwrap();
        assert!((spread(&out) - 0.85 * spread(&l)).abs() < 1e-13);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[2.0; 4]), vec![0.25; 4]);
        let p = normalize(&[3f64.ln(), 0.0]);
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);
        let p = normalize(&[1000.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] < 1e-300);
    }

    #[test]
    fn two_timescale_examples() {
        assert_eq!(two_timescale_rate(0.01, 0.1, 0), 0.01);
        assert!((two_timescale_rate(0.001, 0.0, 25) - 0.026).abs() < 1e-15);
        // direct evaluation of (1 - 0.9999^26) / 0.1
        let direct = (1.0 - 0.9999f64.powi(26)) / 0.1;
        let got = two_timescale_rate(0.001, 0.1, 25);
        assert!((got - direct).abs() < 1e-12);
        assert!((got - 0.025_97).abs() < 5e-6);
        assert!((two_timescale_rate(0.001, 1e-9, 25) - 0.026).abs() < 1e-6);
    }

    #[test]
    fn safe_rate_examples() {
        let stats = GameStats { d_max: 9, a_inf: 1.0, s_max: 10 };
        let r = safe_rate(Regime::Sync, &stats, 0.1).unwrap();
        assert!((r.eta - 1.0 / 36.0).abs() < 1e-15);
        assert_eq!(r.eta_bar, r.eta);

        let r = safe_rate(Regime::FixedDelay { gamma: 50 }, &stats, 0.1).unwrap();
        assert!((r.eta - 1.0 / 117_045.0).abs() < 1e-18);
        assert!((r.eta_bar - two_timescale_rate(r.eta, 0.1, 50)).abs() < 1e-18);

        let c = DelayConstants::bounded(25).unwrap();
        let r = safe_rate(Regime::RandomDelay(c), &stats, 0.1).unwrap();
        let l = std::f64::consts::E * 25.0 * 26.0;
        let expect = (0.1 / (24.0 * 81.0 * (l + 1.0))).min((1.04 - 1.0) / (0.1 * 1.04));
        assert!((r.eta - expect).abs() < 1e-18);

        let r = safe_rate(Regime::Permuted { gamma: 25 }, &stats, 0.1).unwrap();
        let expect = (1.0f64 / (2.0 * 0.1 * 26.0)).min(1.0 / (28.0 * 9.0 * 26f64.powf(2.5)));
        assert!((r.eta - expect).abs() < 1e-18);

        let r = safe_rate(Regime::SyncRegret, &stats, 0.1).unwrap();
        assert!((r.eta - 1.0 / 36.4).abs() < 1e-15);
    }

    #[test]
    fn safe_rate_degenerate_and_mismatched() {
        let zero = GameStats { d_max: 1, a_inf: 0.0, s_max: 2 };
        assert_eq!(safe_rate(Regime::Sync, &zero, 0.1).unwrap().eta, 5.0);
        assert!(matches!(safe_rate(Regime::Sync, &zero, 0.0), Err(RateError::Unbounded)));
        let c = DelayConstants::bounded(10).unwrap();
        let r = safe_rate(Regime::RandomDelay(c), &zero, 0.1).unwrap();
        assert!((r.eta - (c.zeta - 1.0) / (0.1 * c.zeta)).abs() < 1e-15);
        assert!(matches!(
            safe_rate(Regime::RandomDelay(c), &zero, 0.0),
            Err(RateError::Mismatch { .. })
        ));
        assert!(safe_rate(Regime::Permuted { gamma: 3 }, &zero, 0.0).is_err());
    }

    #[test]
    fn rate_setting_validation() {
        assert!(RateSetting::single(0.1, 0.1).is_ok());
        assert!(RateSetting::single(10.0, 0.1).is_err());
        assert!(RateSetting::with_eta_bar(0.1, 0.05, 0.1).is_err());
        let r = RateSetting::two_timescale(0.001, 0.1, 25).unwrap();
        assert!(r.eta_bar > r.eta);
    }

    #[test]
    fn agent_state_matches_kernel() {
        let rates = RateSetting::with_eta_bar(0.1, 0.3, 0.2).unwrap();
        let mut a = AgentState::uniform(3, &rates);
        let f = [1.0, 0.0, -0.5];
        a.update_main(&f, 0.2).unwrap();
        a.update_extrap(&f, 0.2).unwrap();
        let u = vec![-(3f64).ln(); 3];
        let main = mwu_step(&u, &f, 0.1, 0.2).unwrap();
        let ex = mwu_step(&main, &f, 0.3, 0.2).unwrap();
        assert_eq!(a.main_logits, main);
        assert_eq!(a.extrap_logits, ex);
    }
}
