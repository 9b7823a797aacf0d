//! Jacobi-preconditioned conjugate gradients for symmetric positive
//! (semi)definite systems.

use super::{Nullspace, SparseSymSystem};
use crate::error::{Error, Result};
use crate::scalar::{dot, norm2, Real};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats<T> {
    pub iterations: usize,
    /// Recomputed `‖A x − b‖ / ‖b‖` for the projected right-hand side `b`.
    pub residual: T,
}

/// Solves `A x = rhs` to relative residual `rel_tol`, starting from zero.
pub fn solve_spd<T: Real>(system: &SparseSymSystem<T>, rhs: &[T], rel_tol: T) -> Result<(Vec<T>, SolveStats<T>)> {
    solve_spd_from(system, rhs, vec![T::zero(); rhs.len()], rel_tol)
}

/// Same as [`solve_spd`] with an initial guess.
pub fn solve_spd_from<T: Real>(
    system: &SparseSymSystem<T>,
    rhs: &[T],
    x0: Vec<T>,
    rel_tol: T,
) -> Result<(Vec<T>, SolveStats<T>)> {
    let n = system.n();
    if rhs.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "system has {n} unknowns, rhs {} and guess {}",
            rhs.len(),
            x0.len()
        )));
    }
    if !(rel_tol > T::zero() && rel_tol < T::one()) {
        return Err(Error::Config(format!("solver tolerance must lie in (0, 1), got {rel_tol}")));
    }
    let a = &system.matrix;
    let mut b = rhs.to_vec();
    project(system.nullspace, &mut b);
    let nb = norm2(&b);
    let nrhs = norm2(rhs);
    // right-hand sides at roundoff level carry no meaningful kernel component
    let scale = a.diagonal().into_iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let floor = T::lit(1e-12) * scale * T::from_usize_exact(n).sqrt();
    if nrhs > floor {
        let removed = rhs.iter().zip(&b).map(|(&r, &p)| (r - p) * (r - p)).sum::<T>().sqrt();
        if removed > T::lit(1e-6) * nrhs {
            log::warn!("right-hand side had a nullspace component of relative size {}", removed / nrhs);
        }
    }
    if nb == T::zero() {
        return Ok((vec![T::zero(); n], SolveStats { iterations: 0, residual: T::zero() }));
    }

    let inv_diag: Vec<T> =
        a.diagonal().into_iter().map(|d| if d > T::zero() { T::one() / d } else { T::one() }).collect();
    let cap = (20 * n).max(100);
    let target = rel_tol * nb;
    let mut x = x0;
    project(system.nullspace, &mut x);
    let mut r = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut q = vec![T::zero(); n];
    let mut iterations = 0;
    let per_iteration_projection = system.nullspace == Nullspace::Constants;

    // restart on the true residual when the recursive one has drifted
    for _ in 0..4 {
        a.spmv(&x, &mut r);
        r.iter_mut().zip(&b).for_each(|(ri, &bi)| *ri = bi - *ri);
        if norm2(&r) <= target {
            break;
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        if per_iteration_projection {
            project(system.nullspace, &mut z);
        }
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let inner = target * T::lit(0.5);
        loop {
            if iterations >= cap {
                let res = norm2(&r) / nb;
                return Err(Error::NoConvergence { iterations, residual: res.to_f64_lossy() });
            }
            a.spmv(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > T::zero()) {
                break;
            }
            let alpha = rz / pq;
            let mut rr = T::zero();
            let mut rz_new = T::zero();
            for ((((xi, &pi), ri), &qi), (zi, &di)) in
                x.iter_mut().zip(&p).zip(r.iter_mut()).zip(&q).zip(z.iter_mut().zip(&inv_diag))
            {
                *xi += alpha * pi;
                *ri -= alpha * qi;
                *zi = di * *ri;
                rr += *ri * *ri;
                rz_new += *ri * *zi;
            }
            iterations += 1;
            if rr.sqrt() <= inner {
                break;
            }
            if per_iteration_projection {
                project(system.nullspace, &mut z);
                rz_new = dot(&r, &z);
            }
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, &zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        project(system.nullspace, &mut x);
    }
    a.spmv(&x, &mut r);
    r.iter_mut().zip(&b).for_each(|(ri, &bi)| *ri = bi - *ri);
    let residual = norm2(&r) / nb;
    if residual > rel_tol {
        return Err(Error::NoConvergence { iterations, residual: residual.to_f64_lossy() });
    }
    Ok((x, SolveStats { iterations, residual }))
}

/// Removes the declared kernel component from `v`.
pub fn project<T: Real>(nullspace: Nullspace, v: &mut [T]) {
    match nullspace {
        Nullspace::None => {}
        Nullspace::Constants => subtract_mean(v),
        Nullspace::DiscreteGradients { dim, n } => project_gradients(dim, n, v),
    }
}

fn subtract_mean<T: Real>(v: &mut [T]) {
    if v.is_empty() {
        return;
    }
    let mean = v.iter().copied().sum::<T>() / T::from_usize_exact(v.len());
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Periodic lattice helper for the edge/node incidence of an `n^dim` cell mesh.
struct Lattice {
    dim: usize,
    n: usize,
    nodes: usize,
}

impl Lattice {
    fn shift(&self, node: usize, axis: usize, forward: bool) -> usize {
        let stride = self.n.pow(axis as u32);
        let coord = (node / stride) % self.n;
        let new = if forward { (coord + 1) % self.n } else { (coord + self.n - 1) % self.n };
        node - coord * stride + new * stride
    }

    /// `(G p)_e = p(end) − p(start)`.
    fn grad<T: Real>(&self, p: &[T], out: &mut [T]) {
        for dir in 0..self.dim {
            for v in 0..self.nodes {
                out[dir * self.nodes + v] = p[self.shift(v, dir, true)] - p[v];
            }
        }
    }

    fn grad_t<T: Real>(&self, x: &[T], out: &mut [T]) {
        for (v, o) in out.iter_mut().enumerate().take(self.nodes) {
            let mut s = T::zero();
            for dir in 0..self.dim {
                s += x[dir * self.nodes + self.shift(v, dir, false)] - x[dir * self.nodes + v];
            }
            *o = s;
        }
    }

    /// `GᵀG p`.
    fn laplacian<T: Real>(&self, p: &[T], out: &mut [T]) {
        let deg = T::from_usize_exact(2 * self.dim);
        for (v, o) in out.iter_mut().enumerate().take(self.nodes) {
            let mut s = deg * p[v];
            for dir in 0..self.dim {
                s -= p[self.shift(v, dir, true)] + p[self.shift(v, dir, false)];
            }
            *o = s;
        }
    }
}

fn project_gradients<T: Real>(dim: usize, n: usize, v: &mut [T]) {
    let lat = Lattice { dim, n, nodes: n.pow(dim as u32) };
    debug_assert_eq!(v.len(), dim * lat.nodes);
    if n > 1 {
        let mut g = vec![T::zero(); lat.nodes];
        lat.grad_t(v, &mut g);
        let ng = norm2(&g);
        if ng > T::zero() {
            let p = laplacian_solve(&lat, &g, ng);
            let mut gp = vec![T::zero(); v.len()];
            lat.grad(&p, &mut gp);
            v.iter_mut().zip(&gp).for_each(|(x, &y)| *x -= y);
        }
    }
    for dir in 0..dim {
        subtract_mean(&mut v[dir * lat.nodes..(dir + 1) * lat.nodes]);
    }
}

/// CG for the periodic graph Laplacian on mean-zero data.
fn laplacian_solve<T: Real>(lat: &Lattice, rhs: &[T], nrhs: T) -> Vec<T> {
    let m = rhs.len();
    let mut b = rhs.to_vec();
    subtract_mean(&mut b);
    let mut x = vec![T::zero(); m];
    let mut r = b;
    let mut p = r.clone();
    let mut q = vec![T::zero(); m];
    let mut rr = dot(&r, &r);
    let target = T::lit(1e-13) * nrhs;
    for _ in 0..(20 * m).max(100) {
        if rr.sqrt() <= target {
            break;
        }
        lat.laplacian(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > T::zero()) {
            break;
        }
        let alpha = rr / pq;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..m {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}
