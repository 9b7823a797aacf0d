//! Finite element building blocks: quadrature, reference elements, sparse
//! storage, assembly and the symmetric solver.

pub mod assembly;
pub mod element;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use assembly::{
    assemble_curl_stiffness, assemble_edge_load, assemble_scalar_stiffness, assemble_vector_mass, edge_pattern,
    nodal_pattern,
};
pub use solver::{solve_spd, solve_spd_from, SolveStats, DEFAULT_REL_TOL};
pub use sparse::{CsrMatrix, CsrPattern};

/// Kernel of a semidefinite system, removed from right-hand sides and solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nullspace {
    None,
    /// Constant nodal fields on a periodic mesh.
    Constants,
    /// Discrete gradients plus the `dim` constant edge fields of a periodic
    /// `n^dim` cell mesh.
    DiscreteGradients { dim: usize, n: usize },
}

/// How the boundary was treated before assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraints {
    None,
    Periodic,
    EssentialBoundary { eliminated: usize },
}

/// Symmetric sparse matrix with its declared kernel.
#[derive(Debug, Clone)]
pub struct SparseSymSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub nullspace: Nullspace,
    pub constraints: Constraints,
}

impl<T: crate::scalar::Real> SparseSymSystem<T> {
    pub fn new(matrix: CsrMatrix<T>) -> Self {
        Self { matrix, nullspace: Nullspace::None, constraints: Constraints::None }
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}
