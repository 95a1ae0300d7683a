use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("degenerate pendulum: {0}")]
    Degenerate(&'static str),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid step parameters: {0}")]
    InvalidParams(String),
    #[error("time {t} s outside the plan horizon [0, {horizon})")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("boundary value problem needs tf > t0 (t0 = {t0}, tf = {tf})")]
    EmptyInterval { t0: f64, tf: f64 },
    #[error("swing apex height must be non-negative, got {0}")]
    NegativeApex(f64),
    #[error("the COM chain is only defined for zero double support (got {0} s)")]
    DoubleSupportUnsupported(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("invalid noise model: {0}")]
    InvalidNoise(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("pair (A, B) is not stabilizable")]
    NotStabilizable,
    #[error("Lyapunov equation is singular")]
    SingularLyapunov,
    #[error("Riccati iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("Riccati residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("closed loop is not stable (spectral abscissa {0})")]
    Unstable(f64),
    #[error("invalid weights: {0}")]
    InvalidWeights(&'static str),
    #[error("non-finite ZMP command")]
    NonFiniteCommand,
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdjustError {
    #[error("prediction time {t} s beyond step end {step_end} s")]
    PastStepEnd { t: f64, step_end: f64 },
    #[error("invalid compliance configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("step index {0} outside the plan")]
    StepOutOfRange(usize),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("push-limit bracket invalid: {0}")]
    InvalidBracket(String),
    #[error("empty sweep grid")]
    EmptyGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Adjust(#[from] AdjustError),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Malformed(String),
}
