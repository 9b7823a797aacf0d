//! Numerical homogenization of multiscale Maxwell wave equations.
//!
//! The crate solves periodic cell problems for the mass coefficient `b` and
//! the curl coefficient `a`, builds the homogenized tensors level by level,
//! time-integrates fine-scale and homogenized wave problems with edge
//! elements, and measures corrector errors.

pub mod coeffs;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod scalar;
pub mod tensor;
pub mod wave;
pub mod cells;
pub mod corrector;
pub mod harness;

pub use coeffs::{
    validate_bounds, CoefficientField, CoefficientSpec, Dependence, Expression, Family, Layer, ScaleSchedule,
    TrigTerm, Which,
};
pub use error::{Error, Result};
pub use mesh::{CellMesh, DofField, DofKind, DomainMesh, Grid};
pub use scalar::{Real, Vec3};
pub use tensor::SymMat;
pub use cells::{homogenize, HomogenizationResult, HomogenizeOptions, SlowSampling};
pub use corrector::{
    corrector_error, cutoff_corrector_error, cutoff_field, fold, multiscale_corrector_error, reconstruct_corrector,
    reconstruct_multiscale_corrector, unfold, CorrectorErrors, CorrectorField, RunRef, UnfoldedField,
};
pub use harness::{fit_slope, run, ConvergenceReport, RunConfig};
pub use wave::{integrate, setup_problem, Forcing, ProblemKind, TimeGrid, WaveData, WaveOptions, WaveTrajectory};

pub type Spec64 = CoefficientSpec<f64>;
pub type Spec32 = CoefficientSpec<f32>;
pub type Schedule64 = ScaleSchedule<f64>;
pub type Schedule32 = ScaleSchedule<f32>;
pub type Mesh64 = DomainMesh<f64>;
pub type Mesh32 = DomainMesh<f32>;
pub type Homogenized64 = HomogenizationResult<f64>;
pub type Homogenized32 = HomogenizationResult<f32>;
pub type Trajectory64 = WaveTrajectory<f64>;
pub type Trajectory32 = WaveTrajectory<f32>;
