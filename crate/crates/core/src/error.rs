use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("mean charge density {mean} differs from 1 by more than 1e-8")]
    NonNeutral { mean: f64 },
    #[error("max|f| = {max} exceeds 1e6 times the reference maximum {reference}")]
    BlowUp { max: f64, reference: f64 },
    #[error("snapshot time {time} is not a multiple of dt = {dt}")]
    BadSnapshotTime { time: f64, dt: f64 },
    #[error("fluid smoothness lost: max|du/dx|*dt = {courant}")]
    ShockDetected { courant: f64 },
    #[error("corrector imaginary residual {residual} exceeds 1e-9")]
    ComplexLeak { residual: f64 },
    #[error("transport instance has {entries} cost entries (limit 1e6)")]
    SizeExceeded { entries: usize },
    #[error("weight sums differ by {gap}")]
    Infeasible { gap: f64 },
    #[error("Sinkhorn marginal residual {residual} exceeds 1e-6")]
    NoConvergence { residual: f64 },
    #[error("all cloud mass was pruned")]
    EmptyCloud,
    #[error("z-derivative with {nodes} nodes is ill-conditioned (limit 40)")]
    IllConditioned { nodes: usize },
    #[error("missing run for node {node}, eps = {epsilon}")]
    MissingRun { node: usize, epsilon: f64 },
    #[error("no samples at or beyond t0")]
    EmptyWindow,
    #[error("dispersion root not found after {iterations} Newton iterations")]
    NoRoot { iterations: usize },
    #[error("target grid of {target} cells is incompatible with source {source_nx} and factor {n}")]
    GridMismatch { source_nx: usize, target: usize, n: usize },
}

impl Error {
    /// True for failures of the numerics themselves, false for bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonNeutral { .. }
                | Error::BlowUp { .. }
                | Error::ShockDetected { .. }
                | Error::ComplexLeak { .. }
                | Error::NoConvergence { .. }
                | Error::NoRoot { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
