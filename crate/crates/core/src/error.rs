use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("diverged at step {step}")]
    Diverged { step: usize },
    #[error("integration produced a non-finite state")]
    NonFinite,
    #[error("state has dimension {got}, map expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("need n_discard < n_steps (got {n_discard} >= {n_steps})")]
    InvalidSchedule { n_steps: usize, n_discard: usize },
    #[error("init box has dimension {got}, map expects {expected}")]
    BoxDimension { expected: usize, got: usize },
    #[error("trajectory {trajectory} diverged on {retries} consecutive initial conditions")]
    TooManyRetries { trajectory: usize, retries: usize },
    #[error("insufficient filtered pairs: requested {requested}, {available} pass the filter")]
    InsufficientPairs { requested: usize, available: usize },
    #[error("invalid region filter: {0}")]
    InvalidFilter(String),
    #[error("malformed pool file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("operation needs a single-hidden-layer net, this one has {0} hidden layers")]
    MultiLayer(usize),
    #[error("layer shapes do not chain: {0}")]
    Shape(String),
    #[error("unknown activation `{0}`")]
    UnknownActivation(String),
    #[error("non-finite parameter in layer {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyData,
    #[error("architecture expects {arch_in}->{arch_out}, data is {data_in}->{data_out}")]
    DimensionMismatch {
        arch_in: usize,
        arch_out: usize,
        data_in: usize,
        data_out: usize,
    },
    #[error("singular normal equations")]
    Singular,
    #[error("loss became non-finite (diverged)")]
    Diverged,
    #[error("invalid training config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FtleError {
    #[error("probe trajectory diverged: {0}")]
    Diverged(#[from] DynamicsError),
    #[error("invalid FTLE request: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("matrix is not orthogonal (|QᵀQ - I| = {0:.3e})")]
    NotOrthogonal(f64),
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    Shape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("unsupported net: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("invalid bound input: {0}")]
    Invalid(String),
    #[error("unsupported activation `{0}` for the cubic expansion")]
    UnsupportedActivation(String),
    #[error("cubic expansion needs a single-hidden-layer net")]
    MultiLayer,
}
