//! Entropy-regularized optimistic multiplicative weights (OMWU) for
//! zero-sum polymatrix games, with synchronous, randomly delayed, fixed-delay
//! and permuted feedback.
//!
//! ```
//! use polyomwu::{run, EtaChoice, GameSource, GraphSpec, RunConfig};
//!
//! let game = GameSource::Generated { n: 3, action_size: 3, graph: GraphSpec::Complete };
//! let config = RunConfig::new(game, 0.1, EtaChoice::Safe, 200);
//! let traj = run(&config, 7).unwrap();
//! let first = traj.records.first().unwrap().kl_main.unwrap();
//! let last = traj.records.last().unwrap().kl_main.unwrap();
//! assert!(last < first);
//! ```

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delay;
pub mod dynamics;
mod error;
pub mod experiment;
pub mod game;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod rng;

pub use delay::{
    delay_constants, validate_schedule, write_permutation_file, DelayConstants, DelaySchedule, DelayVariant,
    ReplayTable, ScheduleReport,
};
pub use dynamics::{mwu_step, normalize, safe_rate, two_timescale_rate, AgentState, Mode, RateSetting, Regime, SafeRate};
pub use error::{DelayError, GameError, HarnessError, MetricError, RateError};
pub use experiment::{execute_plan, ExperimentPlan, FileConfig, Preset};
pub use game::{Edge, GameStats, GraphSpec, PolymatrixGame, StrategyProfile, ZeroSumCheck, ZeroSumVerdict};
pub use harness::{
    fit_rate, potential, run, run_averaged, AveragedRun, EtaBarChoice, EtaChoice, GameSource, MetricSet, RateFit,
    Record, RunConfig, Trajectory,
};
pub use metrics::{
    br_value, compute_qre, kl, kl_profile, ne_gap, qre_gap, qre_gap_kl_bound, qre_residual, regret, QreSolution,
    RegretReport, RegretTracker,
};
