use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid metric at point {point}: {reason}")]
    InvalidMetric { point: usize, reason: String },

    #[error("non-invertible metric at point {point} (condition number {condition:.3e})")]
    NonInvertibleMetric { point: usize, condition: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate perturbation at point {point}: background + h is not positive definite")]
    DegeneratePerturbation { point: usize },

    #[error("flow degenerated at t = {time:.6e}, point {point}: {reason}")]
    FlowDegeneration {
        time: f64,
        point: usize,
        reason: String,
    },

    #[error("time step collapsed to {dt:.3e} at t = {time:.6e}")]
    HorizonTooLarge { time: f64, dt: f64 },

    #[error("insufficient snapshots: {0}")]
    InsufficientSnapshots(String),

    #[error("kernel time {t:.3e} is below the floor {floor:.3e}")]
    BelowTimeFloor { t: f64, floor: f64 },

    #[error("fixed-point iteration diverged at iteration {iteration} (residuals {residuals:?})")]
    Divergence {
        iteration: usize,
        residuals: Vec<f64>,
    },

    #[error("tracer step too large at t = {time:.6e}: displacement {displacement:.3e} exceeds spacing {spacing:.3e}")]
    StepSize {
        time: f64,
        displacement: f64,
        spacing: f64,
    },

    #[error("map folds at point {point} (jacobian determinant {jacobian:.3e})")]
    Fold { point: usize, jacobian: f64 },

    #[error("insufficient sampling: {0}")]
    InsufficientSampling(String),

    #[error("insufficient grids: {0}")]
    InsufficientGrids(String),

    #[error("no snapshot at t = {0:.6e}")]
    SnapshotMissing(f64),

    #[error("amplitude error: {0}")]
    Amplitude(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
