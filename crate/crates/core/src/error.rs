use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("coefficient `{which}` has eigenvalue {value:.6e} outside the declared bounds [{alpha}, {beta}]")]
    BoundsViolation { which: &'static str, value: f64, alpha: f64, beta: f64 },

    #[error("invalid scale schedule: {0}")]
    InvalidSchedule(String),

    #[error("mesh needs at least one subdivision per axis")]
    EmptyMesh,

    #[error("point {point:?} lies outside the mesh extents")]
    OutsideMesh { point: Vec<f64> },

    #[error("iterative solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("computed {kind} tensor at level {level}, sample {sample} has eigenvalue {value:.6e} outside [{alpha}, {beta}]")]
    TensorBounds {
        kind: &'static str,
        level: usize,
        sample: usize,
        value: f64,
        alpha: f64,
        beta: f64,
    },

    #[error("fine mesh does not resolve the finest scale: need at least {required} subdivisions per axis, got {actual}")]
    UnderResolved { required: usize, actual: usize },

    #[error("invalid wave data: {0}")]
    InvalidData(String),

    #[error("correctors are only defined for a vanishing initial displacement g0 (max |g0| = {0:.3e})")]
    NonzeroInitialDisplacement(f64),

    #[error("time or mesh grids do not match: {0}")]
    GridMismatch(String),

    #[error("cut-off layer of width {epsilon} cannot be represented on a mesh with spacing {h} (need epsilon >= 2h)")]
    LayerTooThin { epsilon: f64, h: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::InvalidSchedule(_)
                | Error::EmptyMesh
                | Error::OutsideMesh { .. }
                | Error::UnderResolved { .. }
                | Error::InvalidData(_)
                | Error::NonzeroInitialDisplacement(_)
                | Error::GridMismatch(_)
                | Error::LayerTooThin { .. }
                | Error::Unsupported(_)
                | Error::Config(_)
                | Error::Expression(_)
                | Error::BoundsViolation { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
