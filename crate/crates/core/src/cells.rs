//! Periodic cell problems and the recursive homogenized tensors.
//!
//! At level `i` (from `n` down to `1`) the cell problems are posed in the
//! fast variable `yᵢ` with the slower variables `(x, y₁, …, yᵢ₋₁)` frozen at
//! the points of a [`SlowGrid`]. Their averages give the level tensors
//! `bⁱ⁻¹`, `aⁱ⁻¹` on that grid, which become the coefficients of level
//! `i − 1` through multilinear interpolation.

use std::io::Write;

use rayon::prelude::*;

use crate::coeffs::{CoefficientSpec, Dependence, Which};
use crate::error::{Error, Result};
use crate::fem::element::{edge_curl, edge_value, q1_grad, q1_value};
use crate::fem::quadrature::TensorRule;
use crate::fem::{assemble_curl_stiffness, assemble_scalar_stiffness, solve_spd};
use crate::mesh::{local_edges, local_nodes, CellMesh, DofKind, Grid};
use crate::scalar::{Real, Vec3};
use crate::tensor::SymMat;

/// Periodic cell solutions of one kind: `w¹…w^d` (nodal) or `N^l` (edge).
#[derive(Debug, Clone)]
pub struct CellSolution<T> {
    pub level: usize,
    pub kind: DofKind,
    pub mesh: CellMesh<T>,
    pub fields: Vec<Vec<T>>,
}

impl<T: Real> CellSolution<T> {
    fn zero(level: usize, kind: DofKind, mesh: CellMesh<T>, count: usize) -> Self {
        let len = match kind {
            DofKind::Nodal => mesh.num_nodes(),
            DofKind::Edge => mesh.num_edges(),
        };
        Self { level, kind, mesh, fields: vec![vec![T::zero(); len]; count] }
    }

    /// `∇_y wʳ(y)` for nodal solutions, `curl_y Nʳ(y)` for edge solutions
    /// (2D scalar curl in component 0).
    pub fn derivative(&self, r: usize, y: &Vec3<T>) -> Vec3<T> {
        let dim = self.mesh.dim();
        let (cell, xi) = self.mesh.locate(y);
        let h = [self.mesh.h(0); 3];
        let f = &self.fields[r];
        let mut out = [T::zero(); 3];
        match self.kind {
            DofKind::Nodal => {
                let nodes = self.mesh.cell_nodes(cell);
                for l in 0..local_nodes(dim) {
                    let g = q1_grad(dim, l, &xi, &h);
                    let v = f[nodes[l]];
                    for k in 0..3 {
                        out[k] += v * g[k];
                    }
                }
            }
            DofKind::Edge => {
                let edges = self.mesh.cell_edges(cell);
                for e in 0..local_edges(dim) {
                    let c = edge_curl(dim, e, &xi, &h);
                    let v = f[edges[e]];
                    for k in 0..3 {
                        out[k] += v * c[k];
                    }
                }
            }
        }
        out
    }

    /// Matrix `J` with `J[k][r] = ∂_k wʳ(y)` (nodal) or `(curl Nʳ(y))_k` (edge).
    pub fn jacobian(&self, y: &Vec3<T>) -> [[T; 3]; 3] {
        let dim = self.mesh.dim();
        let (cell, xi) = self.mesh.locate(y);
        let h = [self.mesh.h(0); 3];
        let mut out = [[T::zero(); 3]; 3];
        match self.kind {
            DofKind::Nodal => {
                let nodes = self.mesh.cell_nodes(cell);
                for l in 0..local_nodes(dim) {
                    let g = q1_grad(dim, l, &xi, &h);
                    for (r, f) in self.fields.iter().enumerate() {
                        let v = f[nodes[l]];
                        for k in 0..3 {
                            out[k][r] += v * g[k];
                        }
                    }
                }
            }
            DofKind::Edge => {
                let edges = self.mesh.cell_edges(cell);
                for e in 0..local_edges(dim) {
                    let c = edge_curl(dim, e, &xi, &h);
                    for (r, f) in self.fields.iter().enumerate() {
                        let v = f[edges[e]];
                        for k in 0..3 {
                            out[k][r] += v * c[k];
                        }
                    }
                }
            }
        }
        out
    }

    /// Point value: `wʳ(y)` in component 0 for nodal solutions, the vector
    /// `Nʳ(y)` for edge solutions.
    pub fn value(&self, r: usize, y: &Vec3<T>) -> Vec3<T> {
        let dim = self.mesh.dim();
        let (cell, xi) = self.mesh.locate(y);
        let h = [self.mesh.h(0); 3];
        let f = &self.fields[r];
        let mut out = [T::zero(); 3];
        match self.kind {
            DofKind::Nodal => {
                let nodes = self.mesh.cell_nodes(cell);
                for l in 0..local_nodes(dim) {
                    out[0] += f[nodes[l]] * q1_value(dim, l, &xi);
                }
            }
            DofKind::Edge => {
                let edges = self.mesh.cell_edges(cell);
                for e in 0..local_edges(dim) {
                    let v = edge_value(dim, e, &xi, &h);
                    for k in 0..3 {
                        out[k] += f[edges[e]] * v[k];
                    }
                }
            }
        }
        out
    }

    /// `|∫ wʳ dy|` for nodal solutions.
    pub fn mean(&self, r: usize) -> T {
        self.fields[r].iter().copied().sum::<T>() / T::from_usize_exact(self.fields[r].len())
    }
}

/// Rule used for integrals against the cell coefficient: in 2D curl terms
/// use the cell centre, everything else the Gauss product rule.
fn cell_rule<T: Real>(dim: usize, qpts: usize, curl: bool) -> TensorRule<T> {
    if curl && dim == 2 {
        TensorRule { points: vec![[T::lit(0.5), T::lit(0.5), T::zero()]], weights: vec![T::one()] }
    } else {
        TensorRule::new(dim, qpts)
    }
}

fn cell_point<T: Real>(mesh: &CellMesh<T>, cell: usize, xi: &Vec3<T>) -> Vec3<T> {
    let o = mesh.cell_origin(cell);
    let h = mesh.h(0);
    [o[0] + xi[0] * h, o[1] + xi[1] * h, o[2] + xi[2] * h]
}

/// Solves `∇·(b(eᵏ + ∇wᵏ)) = 0`, `k = 1..d`, with mean-zero `wᵏ`.
pub fn solve_scalar_cell<T: Real>(
    coef: &(dyn Fn(&Vec3<T>) -> Result<SymMat<T>> + Sync),
    mesh: &CellMesh<T>,
    qpts: usize,
    rel_tol: T,
) -> Result<CellSolution<T>> {
    let dim = mesh.dim();
    let system = assemble_scalar_stiffness(mesh, coef, qpts)?;
    let rule = cell_rule::<T>(dim, qpts, false);
    let h = [mesh.h(0); 3];
    let vol = mesh.cell_volume();
    let nl = local_nodes(dim);
    let mut rhs = vec![vec![T::zero(); mesh.num_nodes()]; dim];
    for c in 0..mesh.num_cells() {
        let nodes = mesh.cell_nodes(c);
        for (q, xi) in rule.points.iter().enumerate() {
            let b = coef(&cell_point(mesh, c, xi))?;
            let w = rule.weights[q] * vol;
            for l in 0..nl {
                let g = q1_grad(dim, l, xi, &h);
                let bg = b.mul_vec(&g);
                for (k, r) in rhs.iter_mut().enumerate() {
                    r[nodes[l]] -= w * bg[k];
                }
            }
        }
    }
    let mut fields = Vec::with_capacity(dim);
    for r in &rhs {
        let (w, _) = solve_spd(&system, r, rel_tol)?;
        fields.push(w);
    }
    Ok(CellSolution { level: 0, kind: DofKind::Nodal, mesh: mesh.clone(), fields })
}

/// `b_{jk} = ∫ (eʲ + ∇wʲ)ᵀ b (eᵏ + ∇wᵏ) dy`.
pub fn scalar_level_tensor<T: Real>(
    coef: &(dyn Fn(&Vec3<T>) -> Result<SymMat<T>> + Sync),
    sol: &CellSolution<T>,
    qpts: usize,
) -> Result<SymMat<T>> {
    let mesh = &sol.mesh;
    let dim = mesh.dim();
    let rule = cell_rule::<T>(dim, qpts, false);
    let h = [mesh.h(0); 3];
    let vol = mesh.cell_volume();
    let nl = local_nodes(dim);
    let mut acc = [[T::zero(); 3]; 3];
    for c in 0..mesh.num_cells() {
        let nodes = mesh.cell_nodes(c);
        for (q, xi) in rule.points.iter().enumerate() {
            let b = coef(&cell_point(mesh, c, xi))?;
            let w = rule.weights[q] * vol;
            let mut fields = [[T::zero(); 3]; 3];
            for (k, f) in fields.iter_mut().enumerate().take(dim) {
                f[k] = T::one();
                for l in 0..nl {
                    let g = q1_grad(dim, l, xi, &h);
                    let v = sol.fields[k][nodes[l]];
                    for a in 0..dim {
                        f[a] += v * g[a];
                    }
                }
            }
            for j in 0..dim {
                let bj = b.mul_vec(&fields[j]);
                for k in j..dim {
                    acc[j][k] += w * crate::scalar::dot3(&bj, &fields[k]);
                }
            }
        }
    }
    let mut out = SymMat::zeros(dim);
    for j in 0..dim {
        for k in j..dim {
            out.set(j, k, acc[j][k]);
        }
    }
    Ok(out)
}

/// Solves `curl(a(eˡ + curl Nˡ)) = 0`; a single problem in 2D, three in 3D.
pub fn solve_curl_cell<T: Real>(
    coef: &(dyn Fn(&Vec3<T>) -> Result<SymMat<T>> + Sync),
    mesh: &CellMesh<T>,
    qpts: usize,
    rel_tol: T,
) -> Result<CellSolution<T>> {
    let dim = mesh.dim();
    let cd = crate::coeffs::curl_dim(dim);
    let system = assemble_curl_stiffness(mesh, coef, qpts, true)?;
    let rule = cell_rule::<T>(dim, qpts, true);
    let h = [mesh.h(0); 3];
    let vol = mesh.cell_volume();
    let ne = local_edges(dim);
    let mut rhs = vec![vec![T::zero(); mesh.num_edges()]; cd];
    for c in 0..mesh.num_cells() {
        let edges = mesh.cell_edges(c);
        for (q, xi) in rule.points.iter().enumerate() {
            let a = coef(&cell_point(mesh, c, xi))?;
            let w = rule.weights[q] * vol;
            for e in 0..ne {
                let ac = a.mul_vec(&edge_curl(dim, e, xi, &h));
                for (l, r) in rhs.iter_mut().enumerate() {
                    r[edges[e]] -= w * ac[l];
                }
            }
        }
    }
    let mut fields = Vec::with_capacity(cd);
    for r in &rhs {
        let (n, _) = solve_spd(&system, r, rel_tol)?;
        fields.push(n);
    }
    Ok(CellSolution { level: 0, kind: DofKind::Edge, mesh: mesh.clone(), fields })
}

/// `a_{pq} = ∫ a_{pk}(δ_{kq} + (curl N^q)_k) dy`, symmetrised. The
/// antisymmetric part vanishes for exact cell solutions.
pub fn curl_level_tensor<T: Real>(
    coef: &(dyn Fn(&Vec3<T>) -> Result<SymMat<T>> + Sync),
    sol: &CellSolution<T>,
    qpts: usize,
) -> Result<SymMat<T>> {
    let mesh = &sol.mesh;
    let dim = mesh.dim();
    let cd = crate::coeffs::curl_dim(dim);
    let rule = cell_rule::<T>(dim, qpts, true);
    let h = [mesh.h(0); 3];
    let vol = mesh.cell_volume();
    let ne = local_edges(dim);
    let mut full = [[T::zero(); 3]; 3];
    for c in 0..mesh.num_cells() {
        let edges = mesh.cell_edges(c);
        for (q, xi) in rule.points.iter().enumerate() {
            let a = coef(&cell_point(mesh, c, xi))?;
            let w = rule.weights[q] * vol;
            for qq in 0..cd {
                let mut f = [T::zero(); 3];
                f[qq] = T::one();
                for e in 0..ne {
                    let ce = edge_curl(dim, e, xi, &h);
                    let v = sol.fields[qq][edges[e]];
                    for k in 0..cd {
                        f[k] += v * ce[k];
                    }
                }
                let af = a.mul_vec(&f);
                for p in 0..cd {
                    full[p][qq] += w * af[p];
                }
            }
        }
    }
    Ok(SymMat::symmetric_part(cd, &full))
}

/// Uniform sampling grid over the dependent components of the slow
/// variables `(x, y₁, …, y_m)`.
///
/// `x` components use the vertices `Lₖ·j/(S−1)` (clamped interpolation);
/// `yⱼ` components use the periodic points `j/S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowGrid<T> {
    dim: usize,
    slow_levels: usize,
    /// `(variable, axis, count)`, variable 0 is `x`.
    axes: Vec<(usize, usize, usize)>,
    extents: Vec3<T>,
}

impl<T: Real> SlowGrid<T> {
    pub fn new(dim: usize, slow_levels: usize, dep: &Dependence, x_points: usize, y_points: usize, extents: &[T]) -> Self {
        let mut axes = Vec::new();
        for k in 0..dim {
            if dep.x[k] {
                axes.push((0, k, x_points.max(2)));
            }
        }
        for j in 0..slow_levels {
            for k in 0..dim {
                if dep.y[j][k] {
                    axes.push((j + 1, k, y_points.max(1)));
                }
            }
        }
        let mut ext = [T::one(); 3];
        ext[..dim].copy_from_slice(&extents[..dim]);
        Self { dim, slow_levels, axes, extents: ext }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.2).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn depends_on_x(&self) -> bool {
        self.axes.iter().any(|a| a.0 == 0)
    }

    fn coordinate(&self, axis: usize, j: usize) -> T {
        let (var, k, n) = self.axes[axis];
        if var == 0 {
            self.extents[k] * T::from_usize_exact(j) / T::from_usize_exact(n - 1)
        } else {
            T::from_usize_exact(j) / T::from_usize_exact(n)
        }
    }

    /// Slow point of sample `s`; unsampled components are zero.
    pub fn point(&self, s: usize) -> (Vec3<T>, Vec<Vec3<T>>) {
        let mut x = [T::zero(); 3];
        let mut ys = vec![[T::zero(); 3]; self.slow_levels];
        let mut r = s;
        for (axis, &(var, k, n)) in self.axes.iter().enumerate() {
            let c = self.coordinate(axis, r % n);
            r /= n;
            if var == 0 {
                x[k] = c;
            } else {
                ys[var - 1][k] = c;
            }
        }
        (x, ys)
    }

    /// Samples and weights of the multilinear interpolant at `(x, ys)`.
    pub fn stencil(&self, x: &Vec3<T>, ys: &[Vec3<T>]) -> Vec<(usize, T)> {
        let mut out = vec![(0usize, T::one())];
        let mut stride = 1;
        for &(var, k, n) in &self.axes {
            let (lo, hi, t) = if var == 0 {
                let s = (x[k] / self.extents[k]).max(T::zero()).min(T::one()) * T::from_usize_exact(n - 1);
                let lo = (s.floor().to_f64_lossy() as usize).min(n - 2);
                (lo, lo + 1, s - T::from_usize_exact(lo))
            } else {
                let s = ys[var - 1][k].frac() * T::from_usize_exact(n);
                let lo = (s.floor().to_f64_lossy() as usize).min(n - 1);
                (lo, (lo + 1) % n, s - T::from_usize_exact(lo))
            };
            let mut next = Vec::with_capacity(out.len() * 2);
            for &(idx, w) in &out {
                if t != T::one() {
                    next.push((idx + lo * stride, w * (T::one() - t)));
                }
                if t != T::zero() {
                    next.push((idx + hi * stride, w * t));
                }
            }
            out = next;
            stride *= n;
        }
        out
    }
}

/// Level tensors and cell solutions of one coefficient at one level.
#[derive(Debug, Clone)]
pub struct LevelData<T> {
    /// Level of the cell problems; the tensors are the level `level − 1` coefficient.
    pub level: usize,
    pub grid: SlowGrid<T>,
    pub tensors: Vec<SymMat<T>>,
    pub solutions: Vec<CellSolution<T>>,
}

impl<T: Real> LevelData<T> {
    pub fn interpolate(&self, x: &Vec3<T>, ys: &[Vec3<T>]) -> SymMat<T> {
        let dim = self.tensors[0].dim();
        SymMat::weighted_sum(dim, self.grid.stencil(x, ys).into_iter().map(|(s, w)| (w, &self.tensors[s])))
    }

    /// Interpolated `∇_y wʳ` or `curl_y Nʳ` at fast point `y`.
    pub fn derivative(&self, r: usize, x: &Vec3<T>, ys: &[Vec3<T>], y: &Vec3<T>) -> Vec3<T> {
        let mut out = [T::zero(); 3];
        for (s, w) in self.grid.stencil(x, ys) {
            let d = self.solutions[s].derivative(r, y);
            for k in 0..3 {
                out[k] += w * d[k];
            }
        }
        out
    }

    /// Interpolated cell Jacobian, see [`CellSolution::jacobian`].
    pub fn jacobian(&self, x: &Vec3<T>, ys: &[Vec3<T>], y: &Vec3<T>) -> [[T; 3]; 3] {
        let mut out = [[T::zero(); 3]; 3];
        for (s, w) in self.grid.stencil(x, ys) {
            let j = self.solutions[s].jacobian(y);
            for k in 0..3 {
                for r in 0..3 {
                    out[k][r] += w * j[k][r];
                }
            }
        }
        out
    }

    /// Interpolated cell value, see [`CellSolution::value`].
    pub fn value(&self, r: usize, x: &Vec3<T>, ys: &[Vec3<T>], y: &Vec3<T>) -> Vec3<T> {
        let mut out = [T::zero(); 3];
        for (s, w) in self.grid.stencil(x, ys) {
            let d = self.solutions[s].value(r, y);
            for k in 0..3 {
                out[k] += w * d[k];
            }
        }
        out
    }
}

/// Resolution of the slow-variable sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowSampling<T> {
    pub x_points: usize,
    pub y_points: usize,
    pub extents: Vec<T>,
}

impl<T: Real> SlowSampling<T> {
    pub fn unit(dim: usize, x_points: usize, y_points: usize) -> Self {
        Self { x_points, y_points, extents: vec![T::one(); dim] }
    }
}

/// Cell problem solutions and tensors for every level, down to `a⁰`, `b⁰`.
#[derive(Debug, Clone)]
pub struct HomogenizationResult<T> {
    spec: CoefficientSpec<T>,
    cell_n: Vec<usize>,
    /// `b_levels[i-1]` holds the level-`i` data.
    b_levels: Vec<LevelData<T>>,
    a_levels: Vec<LevelData<T>>,
}

/// Options of [`homogenize`].
#[derive(Debug, Clone, Copy)]
pub struct HomogenizeOptions<T> {
    pub rel_tol: T,
}

impl<T: Real> Default for HomogenizeOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(crate::fem::DEFAULT_REL_TOL) }
    }
}

/// Runs the recursion from level `n` down to level 1.
pub fn homogenize<T: Real>(
    spec: &CoefficientSpec<T>,
    cell_n: &[usize],
    sampling: &SlowSampling<T>,
    options: &HomogenizeOptions<T>,
) -> Result<HomogenizationResult<T>> {
    let n = spec.levels();
    let dim = spec.dim();
    if cell_n.len() != n {
        return Err(Error::DimensionMismatch(format!("{} cell resolutions for {n} levels", cell_n.len())));
    }
    if sampling.extents.len() != dim {
        return Err(Error::DimensionMismatch(format!("{} extents for dimension {dim}", sampling.extents.len())));
    }
    let mut out = HomogenizationResult { spec: spec.clone(), cell_n: cell_n.to_vec(), b_levels: vec![], a_levels: vec![] };
    for which in [Which::B, Which::A] {
        let dep = spec.dependence(which);
        let mut levels: Vec<LevelData<T>> = Vec::with_capacity(n);
        for i in (1..=n).rev() {
            let grid = SlowGrid::new(dim, i - 1, &dep, sampling.x_points, sampling.y_points, &sampling.extents);
            let mesh = CellMesh::new(dim, cell_n[i - 1])?;
            let qpts = if i == n { spec.quadrature_points(which) } else { 2 };
            let fast = dep.depends_on_level(i);
            let finer = levels.last();
            let results: Vec<Result<(SymMat<T>, CellSolution<T>)>> = (0..grid.len())
                .into_par_iter()
                .map(|s| {
                    let (x, slow) = grid.point(s);
                    let coef = |y: &Vec3<T>| -> Result<SymMat<T>> {
                        let mut ys = slow.clone();
                        ys.push(*y);
                        match finer {
                            None => spec.eval(which, &x, &ys),
                            Some(f) => Ok(f.interpolate(&x, &ys)),
                        }
                    };
                    let count = if which == Which::B { dim } else { spec.curl_dim() };
                    let kind = if which == Which::B { DofKind::Nodal } else { DofKind::Edge };
                    let (tensor, mut sol) = if !fast {
                        (coef(&[T::zero(); 3])?, CellSolution::zero(i, kind, mesh.clone(), count))
                    } else if which == Which::B {
                        let sol = solve_scalar_cell(&coef, &mesh, qpts, options.rel_tol)?;
                        (scalar_level_tensor(&coef, &sol, qpts)?, sol)
                    } else {
                        let sol = solve_curl_cell(&coef, &mesh, qpts, options.rel_tol)?;
                        (curl_level_tensor(&coef, &sol, qpts)?, sol)
                    };
                    sol.level = i;
                    check_tensor(spec, which, i - 1, s, &tensor)?;
                    Ok((tensor, sol))
                })
                .collect();
            let mut tensors = Vec::with_capacity(results.len());
            let mut solutions = Vec::with_capacity(results.len());
            for r in results {
                let (t, s) = r?;
                tensors.push(t);
                solutions.push(s);
            }
            levels.push(LevelData { level: i, grid, tensors, solutions });
        }
        levels.reverse();
        match which {
            Which::B => out.b_levels = levels,
            Which::A => out.a_levels = levels,
        }
    }
    Ok(out)
}

fn check_tensor<T: Real>(spec: &CoefficientSpec<T>, which: Which, level: usize, sample: usize, t: &SymMat<T>) -> Result<()> {
    let (lo, hi) = t.min_max_eigenvalue();
    let slack = T::lit(1e-8) * spec.beta();
    let bad = if !(lo >= spec.alpha() - slack) {
        Some(lo)
    } else if !(hi <= spec.beta() + slack) {
        Some(hi)
    } else {
        None
    };
    match bad {
        Some(v) => Err(Error::TensorBounds {
            kind: which.name(),
            level,
            sample,
            value: v.to_f64_lossy(),
            alpha: spec.alpha().to_f64_lossy(),
            beta: spec.beta().to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

impl<T: Real> HomogenizationResult<T> {
    pub fn spec(&self) -> &CoefficientSpec<T> {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn levels(&self) -> usize {
        self.spec.levels()
    }

    pub fn cell_n(&self) -> &[usize] {
        &self.cell_n
    }

    /// Data of cell-problem level `i` (1-based).
    pub fn level(&self, which: Which, i: usize) -> &LevelData<T> {
        match which {
            Which::A => &self.a_levels[i - 1],
            Which::B => &self.b_levels[i - 1],
        }
    }

    /// `b⁰(x)`.
    pub fn b0(&self, x: &Vec3<T>) -> SymMat<T> {
        self.b_levels[0].interpolate(x, &[])
    }

    /// `a⁰(x)`; 1×1 in 2D.
    pub fn a0(&self, x: &Vec3<T>) -> SymMat<T> {
        self.a_levels[0].interpolate(x, &[])
    }

    pub fn homogenized(&self, which: Which, x: &Vec3<T>) -> SymMat<T> {
        match which {
            Which::A => self.a0(x),
            Which::B => self.b0(x),
        }
    }

    /// True when `a⁰` and `b⁰` do not depend on `x`.
    pub fn is_x_independent(&self) -> bool {
        !self.a_levels[0].grid.depends_on_x() && !self.b_levels[0].grid.depends_on_x()
    }

    /// True when some cell solution or tensor at any level depends on `x`.
    pub fn depends_on_x(&self) -> bool {
        self.a_levels.iter().chain(&self.b_levels).any(|l| l.grid.depends_on_x())
    }

    /// `∇_{yᵢ} wᵢʳ(x, y₁..yᵢ₋₁, yᵢ)`.
    pub fn cell_gradient(&self, i: usize, r: usize, x: &Vec3<T>, slow: &[Vec3<T>], y: &Vec3<T>) -> Vec3<T> {
        self.b_levels[i - 1].derivative(r, x, slow, y)
    }

    /// `curl_{yᵢ} Nᵢʳ(x, y₁..yᵢ₋₁, yᵢ)`; in 2D the scalar curl in component 0.
    pub fn cell_curl(&self, i: usize, r: usize, x: &Vec3<T>, slow: &[Vec3<T>], y: &Vec3<T>) -> Vec3<T> {
        self.a_levels[i - 1].derivative(r, x, slow, y)
    }

    /// Writes every level tensor as one text line per sample:
    /// `field level sample <slow coordinates> : <upper-triangle entries>`.
    pub fn write_tensors(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# field level sample x[..] y1[..] ... : upper-triangle entries")?;
        for (name, levels) in [("b", &self.b_levels), ("a", &self.a_levels)] {
            for data in levels {
                for (s, t) in data.tensors.iter().enumerate() {
                    let (x, ys) = data.grid.point(s);
                    write!(w, "{name} {} {s}", data.level - 1)?;
                    for v in x.iter().take(self.dim()) {
                        write!(w, " {:.16e}", v.to_f64_lossy())?;
                    }
                    for y in &ys {
                        for v in y.iter().take(self.dim()) {
                            write!(w, " {:.16e}", v.to_f64_lossy())?;
                        }
                    }
                    write!(w, " :")?;
                    for i in 0..t.dim() {
                        for j in i..t.dim() {
                            write!(w, " {:.16e}", t.get(i, j).to_f64_lossy())?;
                        }
                    }
                    writeln!(w)?;
                }
            }
        }
        Ok(())
    }
}
