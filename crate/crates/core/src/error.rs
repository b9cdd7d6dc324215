use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),
    #[error("subject {id}: state {state} at t={t} is outside the state space")]
    InvalidState { id: String, t: u32, state: usize },
    #[error("subject {id}: transition {from}->{to} at t={t} is not permissible")]
    IllegalTransition { id: String, t: u32, from: usize, to: usize },
    #[error("subject {id}: expected t={expected}, found t={found}")]
    NonContiguousTime { id: String, expected: u32, found: u32 },
    #[error("subject {id}: activity after absorption in state {state} at t={t}")]
    PostAbsorbingActivity { id: String, t: u32, state: usize },
    #[error("subject {id}: {rows} covariate rows for {states} states")]
    CovariateRowMismatch { id: String, rows: usize, states: usize },
    #[error("edge {from}->{to} is not a permissible transition")]
    UnknownEdge { from: usize, to: usize },
    #[error("degenerate labels for edge {from}->{to}: {positives} positives out of {rows} rows")]
    DegenerateLabels { from: usize, to: usize, rows: usize, positives: usize },
    #[error("invalid spline range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("spline basis dimension {0} is below the minimum of 4")]
    DimTooSmall(usize),
    #[error("weight-of-evidence target has a single class")]
    AllSameTarget,
    #[error("design is rank deficient in block `{block}` (column {column})")]
    RankDeficient { block: String, column: usize },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite activation in layer {0}")]
    NonFiniteActivation(usize),
    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0} observed classes; at least two are needed")]
    TooFewClasses(usize),
    #[error("binary AUC needs both classes")]
    OneClassOnly,
    #[error("no calibration subjects start in state {0}")]
    EmptyStartState(usize),
    #[error("cut-point rule has no entry for start state {0}")]
    MissingStartState(usize),
    #[error("unknown nonlinear function id {0}")]
    UnknownNonlinear(usize),
    #[error("panel is empty")]
    EmptyPanel,
    #[error("evaluation span {t1}-{t2} has no subjects")]
    EmptySpan { t1: u32, t2: u32 },
    #[error("too many bootstrap replicates failed: {succeeded} of {requested} succeeded")]
    BootstrapFailed { succeeded: usize, requested: usize },
}

impl Error {
    /// Numerical failures as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::NonFiniteActivation(_) | Error::BootstrapFailed { .. })
    }
}
