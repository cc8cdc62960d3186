use thiserror::Error;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("player {player} out of range for a {n}-player game")]
    PlayerOutOfRange { player: usize, n: usize },
    #[error("player {0} has an empty action set")]
    EmptyActionSet(usize),
    #[error("action {action} out of range for player {player} with {size} actions")]
    ActionOutOfRange { player: usize, action: usize, size: usize },
    #[error("self-edge at player {0}")]
    SelfEdge(usize),
    #[error("edge ({0}, {1}) listed more than once")]
    DuplicateEdge(usize, usize),
    #[error("payoff matrix A_{i}{j} has {found} entries, expected {expected}")]
    MatrixShape { i: usize, j: usize, expected: usize, found: usize },
    #[error("non-finite payoff on edge ({0}, {1})")]
    NonFinitePayoff(usize, usize),
    #[error("profile has {found} players, expected {expected}")]
    ProfileShape { expected: usize, found: usize },
    #[error("strategy of player {player} has length {found}, expected {expected}")]
    StrategyLength { player: usize, expected: usize, found: usize },
    #[error("strategy of player {player} is not a probability vector")]
    NotSimplex { player: usize },
    #[error("invalid graph specification {0:?}")]
    InvalidGraph(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed game file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    /// `p(k) > 0` where `q(k) = 0`.
    #[error("KL divergence is infinite: q vanishes at index {index} where p = {p}")]
    InfiniteDivergence { index: usize, p: f64 },
    #[error("temperature must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("regret needs a nonempty history")]
    EmptyHistory,
    #[error("QRE solver stopped after {iterations} iterations with residual {residual:e}")]
    QreNotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Error)]
pub enum RateError {
    #[error("non-finite feedback at index {0}")]
    NonFiniteFeedback(usize),
    #[error("logits and feedback have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("rate * tau = {0} exceeds 1")]
    RateTooLarge(f64),
    #[error("learning rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("regime {regime} requires {what}")]
    Mismatch { regime: &'static str, what: &'static str },
    #[error("no finite learning-rate bound: tau = 0 and the game has no payoffs")]
    Unbounded,
}

#[derive(Debug, Error)]
pub enum DelayError {
    #[error("agent {agent}: kappa requested for t = {got}, expected t = {expected}")]
    OutOfOrder { agent: usize, expected: usize, got: usize },
    #[error("agent {0} out of range")]
    AgentOutOfRange(usize),
    #[error("{0} delays have no tail constants")]
    NoConstants(&'static str),
    #[error("invalid delay parameter: {0}")]
    InvalidParameter(String),
    #[error("replay schedule has no entry for agent {agent} at t = {t}")]
    MissingReplay { agent: usize, t: usize },
    #[error("permutation file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Delay(#[from] DelayError),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("iterates diverged (non-finite logits) at t = {0}")]
    Diverged(usize),
    #[error("feedback index {index} requested at t = {t} was already evicted")]
    Evicted { t: usize, index: usize },
    #[error("seed {seed}: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("{0}")]
    Unavailable(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Divergence is reported through its own exit status by the CLI.
    pub fn is_divergence(&self) -> bool {
        match self {
            HarnessError::Diverged(_) => true,
            HarnessError::Seed { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
