//! First-order correctors, unfolding/folding and homogenization error norms.
//!
//! With `U = u₀` the homogenized solution, `G` the interpolated initial
//! velocity and `Jᵢ`, `Jcᵢ` the cell Jacobians `∂_k wᵢʳ` and
//! `(curl Nᵢʳ)_k`, the corrector fields are
//!
//! ```text
//! v_c = ∂ₜU + (P − I)(∂ₜU − G),   P = (I + Jₙ) ⋯ (I + J₁)
//! q_c = curl U + (Q − I) curl U,  Q = (I + Jcₙ) ⋯ (I + Jc₁)
//! ```
//!
//! evaluated at `yᵢ = {x/εᵢ}` (pointwise) or folded with `𝒰`. The kernels
//! `P − I` and `Q − I` do not depend on time and are computed once per fine
//! quadrature point.

mod cutoff;
mod unfold;

use std::io::Write;

use rayon::prelude::*;

pub use cutoff::{boundary_layer_norm, cutoff_corrector_error, cutoff_field, eval_nodal};
pub use unfold::{
    fold, fold_at, fold_slots, lattice_cells, unfold, unfold_point, CompositeRule, UnfoldedField,
};

use crate::cells::HomogenizationResult;
use crate::coeffs::{curl_dim, ScaleSchedule, Which};
use crate::error::{Error, Result};
use crate::fem::element::edge_field;
use crate::fem::quadrature::TensorRule;
use crate::mesh::{DomainMesh, Grid};
use crate::scalar::{Real, Vec3};
use crate::wave::{cell_dofs, interpolate_edges, interpolate_interior, WaveTrajectory};

/// Fine cells per reduction chunk; partial sums are added in chunk order.
const CHUNK: usize = 64;

/// A mesh with a trajectory computed on it.
#[derive(Clone, Copy)]
pub struct RunRef<'a, T> {
    pub mesh: &'a DomainMesh<T>,
    pub traj: &'a WaveTrajectory<T>,
}

impl<'a, T> RunRef<'a, T> {
    pub fn new(mesh: &'a DomainMesh<T>, traj: &'a WaveTrajectory<T>) -> Self {
        Self { mesh, traj }
    }
}

/// Per-stamp error series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrectorErrors<T> {
    pub times: Vec<T>,
    pub velocity: Vec<T>,
    pub curl: Vec<T>,
}

impl<T: Real> CorrectorErrors<T> {
    fn max_of(v: &[T]) -> T {
        v.iter().fold(T::zero(), |m, &e| m.max(e))
    }

    /// `max_t ‖∂ₜu^ε − v_c‖`.
    pub fn max_velocity(&self) -> T {
        Self::max_of(&self.velocity)
    }

    /// `max_t ‖curl u^ε − q_c‖`.
    pub fn max_curl(&self) -> T {
        Self::max_of(&self.curl)
    }

    /// Sum of the two per-stamp errors.
    pub fn total_series(&self) -> Vec<T> {
        self.velocity.iter().zip(&self.curl).map(|(a, b)| *a + *b).collect()
    }

    /// `max_t` of the per-stamp sum.
    pub fn max_total(&self) -> T {
        Self::max_of(&self.total_series())
    }

    /// `max_t ‖·‖ + max_t ‖·‖`.
    pub fn total(&self) -> T {
        self.max_velocity() + self.max_curl()
    }

    /// Columns `t,E_vel,E_curl,E_ms`.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "t,E_vel,E_curl,E_ms")?;
        for k in 0..self.times.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[k].to_f64_lossy(),
                self.velocity[k].to_f64_lossy(),
                self.curl[k].to_f64_lossy(),
                (self.velocity[k] + self.curl[k]).to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

/// Corrector values at the fine quadrature points of one stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSample<T> {
    pub time: T,
    pub velocity: Vec<Vec3<T>>,
    /// 2D: scalar curl in component 0.
    pub curl: Vec<Vec3<T>>,
    /// `∂ₜu₀` and `curl u₀` at the same points (folded with `𝒰` in the
    /// multiscale variant).
    pub homogenized_velocity: Vec<Vec3<T>>,
    pub homogenized_curl: Vec<Vec3<T>>,
}

#[derive(Debug, Clone)]
enum Plan<T> {
    Pointwise,
    /// Homogenized data are read at `ε₁(cell + t₁)` for the Gauss points `t₁`.
    Folded { eps1: T, cells: [usize; 3], t1: Vec<(Vec3<T>, T)>, shared: bool, g: Vec<Vec3<T>> },
}

/// First-order corrector of a homogenized run, on the quadrature of a fine mesh.
#[derive(Debug, Clone)]
pub struct CorrectorField<T> {
    dim: usize,
    cd: usize,
    fine: DomainMesh<T>,
    rule: TensorRule<T>,
    coarse: DomainMesh<T>,
    times: Vec<T>,
    u0: Vec<Vec<T>>,
    v0: Vec<Vec<T>>,
    g1: Vec<T>,
    plan: Plan<T>,
    /// `P − I` per kernel slot, `dim × dim` row-major.
    vel: Vec<T>,
    /// `Q − I` per kernel slot, `cd × cd` row-major.
    curl: Vec<T>,
    slots: usize,
}

fn widths<T: Real>(mesh: &DomainMesh<T>) -> Vec3<T> {
    [mesh.h(0), mesh.h(1), if mesh.dim() == 3 { mesh.h(2) } else { T::one() }]
}

fn qp_point<T: Real>(mesh: &DomainMesh<T>, h: &Vec3<T>, cell: usize, xi: &Vec3<T>) -> Vec3<T> {
    let o = mesh.cell_origin(cell);
    [o[0] + xi[0] * h[0], o[1] + xi[1] * h[1], o[2] + xi[2] * h[2]]
}

/// `(P − I, Q − I)` at slow point `x` and fast points `ys[i−1]` of each level.
fn kernel_at<T: Real>(hom: &HomogenizationResult<T>, x: &Vec3<T>, ys: &[Vec3<T>]) -> ([[T; 3]; 3], [[T; 3]; 3]) {
    let d = hom.dim();
    let cd = curl_dim(d);
    let mut p = identity::<T>(d);
    let mut q = identity::<T>(cd);
    for i in 1..=hom.levels() {
        let j = hom.level(Which::B, i).jacobian(x, &ys[..i - 1], &ys[i - 1]);
        p = mul_plus_identity(d, &j, &p);
        let jc = hom.level(Which::A, i).jacobian(x, &ys[..i - 1], &ys[i - 1]);
        q = mul_plus_identity(cd, &jc, &q);
    }
    for k in 0..3 {
        p[k][k] -= if k < d { T::one() } else { T::zero() };
        q[k][k] -= if k < cd { T::one() } else { T::zero() };
    }
    (p, q)
}

fn identity<T: Real>(d: usize) -> [[T; 3]; 3] {
    let mut m = [[T::zero(); 3]; 3];
    for (k, row) in m.iter_mut().enumerate().take(d) {
        row[k] = T::one();
    }
    m
}

/// `(I + j) · m`.
fn mul_plus_identity<T: Real>(d: usize, j: &[[T; 3]; 3], m: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = *m;
    for k in 0..d {
        for c in 0..d {
            let mut s = T::zero();
            for r in 0..d {
                s += j[k][r] * m[r][c];
            }
            out[k][c] += s;
        }
    }
    out
}

fn apply<T: Real>(d: usize, k: &[T], v: &Vec3<T>) -> Vec3<T> {
    let mut out = [T::zero(); 3];
    for a in 0..d {
        let mut s = T::zero();
        for b in 0..d {
            s += k[a * d + b] * v[b];
        }
        out[a] = s;
    }
    out
}

fn check_g0<T: Real>(mesh: &DomainMesh<T>, g0: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync)) -> Result<()> {
    let dofs = interpolate_edges(mesh, g0);
    let hmin = (0..mesh.dim()).map(|a| mesh.h(a)).fold(T::infinity(), |m, h| m.min(h));
    let max = dofs.iter().fold(T::zero(), |m, v| m.max(v.abs())) / hmin;
    if max > T::lit(1e-12) {
        return Err(Error::NonzeroInitialDisplacement(max.to_f64_lossy()));
    }
    Ok(())
}

fn check_inputs<T: Real>(
    coarse: &RunRef<'_, T>,
    hom: &HomogenizationResult<T>,
    schedule: &ScaleSchedule<T>,
    fine: &DomainMesh<T>,
) -> Result<()> {
    let dim = hom.dim();
    if schedule.levels() != hom.levels() {
        return Err(Error::DimensionMismatch(format!(
            "schedule has {} levels, homogenization has {}",
            schedule.levels(),
            hom.levels()
        )));
    }
    if coarse.mesh.dim() != dim || fine.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "meshes of dimension {} and {} for coefficients of dimension {dim}",
            coarse.mesh.dim(),
            fine.dim()
        )));
    }
    for a in 0..dim {
        let (lc, lf) = (coarse.mesh.extent(a), fine.extent(a));
        if (lc - lf).abs() > T::lit(1e-12) * lf {
            return Err(Error::GridMismatch(format!("extent {a}: homogenized {lc}, fine {lf}")));
        }
    }
    let t = coarse.traj;
    let ndof = coarse.mesh.num_edge_dofs();
    if t.u.len() != t.times.len() || t.v.len() != t.times.len() || t.u.iter().chain(&t.v).any(|x| x.len() != ndof) {
        return Err(Error::GridMismatch("homogenized trajectory does not match its mesh".into()));
    }
    if coarse.mesh.h(0) > schedule.base() {
        log::warn!(
            "homogenized mesh spacing {} exceeds eps1 = {}; products with cell fields may alias",
            coarse.mesh.h(0),
            schedule.base()
        );
    }
    Ok(())
}

impl<T: Real> CorrectorField<T> {
    fn base(
        coarse: &RunRef<'_, T>,
        hom: &HomogenizationResult<T>,
        g1: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
        fine: &DomainMesh<T>,
        qpts: usize,
        plan: Plan<T>,
    ) -> Result<Self> {
        let dim = hom.dim();
        Ok(Self {
            dim,
            cd: curl_dim(dim),
            fine: fine.clone(),
            rule: TensorRule::new(dim, qpts),
            coarse: coarse.mesh.clone(),
            times: coarse.traj.times.clone(),
            u0: coarse.traj.u.clone(),
            v0: coarse.traj.v.clone(),
            g1: interpolate_interior(coarse.mesh, g1, "g1")?,
            plan,
            vel: Vec::new(),
            curl: Vec::new(),
            slots: 1,
        })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn fine_mesh(&self) -> &DomainMesh<T> {
        &self.fine
    }

    pub fn num_quadrature_points(&self) -> usize {
        self.fine.num_cells() * self.rule.len()
    }

    /// Fine quadrature points, cell by cell.
    pub fn quadrature_points(&self) -> Vec<Vec3<T>> {
        let h = widths(&self.fine);
        (0..self.fine.num_cells())
            .flat_map(|c| self.rule.points.iter().map(move |xi| (c, *xi)).collect::<Vec<_>>())
            .map(|(c, xi)| qp_point(&self.fine, &h, c, &xi))
            .collect()
    }

    /// Index of the stored stamp at time `t`.
    pub fn stamp_index(&self, t: T) -> Result<usize> {
        let tol = T::lit(1e-9) * self.times.last().copied().unwrap_or(T::one()).abs().max(T::one());
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or_else(|| Error::GridMismatch(format!("no homogenized stamp at t = {t}")))
    }

    fn fill_kernels(&mut self, f: impl Fn(&Vec3<T>, usize) -> ([[T; 3]; 3], [[T; 3]; 3]) + Sync) {
        let (d, cd) = (self.dim, self.cd);
        let nq = self.rule.len();
        let slots = self.slots;
        let h = widths(&self.fine);
        let cells = self.fine.num_cells();
        let mut vel = vec![T::zero(); cells * nq * slots * d * d];
        let mut curl = vec![T::zero(); cells * nq * slots * cd * cd];
        let fine = &self.fine;
        let rule = &self.rule;
        vel.par_chunks_mut(nq * slots * d * d)
            .zip(curl.par_chunks_mut(nq * slots * cd * cd))
            .enumerate()
            .for_each(|(c, (vc, cc))| {
                for (q, xi) in rule.points.iter().enumerate() {
                    let x = qp_point(fine, &h, c, xi);
                    for s in 0..slots {
                        let (p, k) = f(&x, s);
                        let o = (q * slots + s) * d * d;
                        for a in 0..d {
                            for b in 0..d {
                                vc[o + a * d + b] = p[a][b];
                            }
                        }
                        let o = (q * slots + s) * cd * cd;
                        for a in 0..cd {
                            for b in 0..cd {
                                cc[o + a * cd + b] = k[a][b];
                            }
                        }
                    }
                }
            });
        self.vel = vel;
        self.curl = curl;
    }

    /// Homogenized `(∂ₜu₀, curl u₀, G)` at `x` for stamp `k`.
    fn coarse_at(&self, k: usize, x: &Vec3<T>) -> Result<(Vec3<T>, Vec3<T>, Vec3<T>)> {
        let (cell, xi) = self.coarse.locate(x)?;
        let h = widths(&self.coarse);
        let (_, c) = edge_field(self.dim, &cell_dofs(&self.coarse, &self.u0[k], cell), &xi, &h);
        let (v, _) = edge_field(self.dim, &cell_dofs(&self.coarse, &self.v0[k], cell), &xi, &h);
        let (g, _) = edge_field(self.dim, &cell_dofs(&self.coarse, &self.g1, cell), &xi, &h);
        Ok((v, c, g))
    }

    /// Per-stamp table of homogenized values at the folding samples.
    fn stamp_table(&self, k: usize) -> Result<Vec<(Vec3<T>, Vec3<T>)>> {
        match &self.plan {
            Plan::Pointwise => Ok(Vec::new()),
            Plan::Folded { eps1, cells, t1, .. } => {
                let ncell: usize = cells[..self.dim].iter().product();
                (0..ncell * t1.len())
                    .into_par_iter()
                    .map(|s| {
                        let x = self.sample_point(*eps1, cells, &t1[s % t1.len()].0, s / t1.len());
                        let (v, c, _) = self.coarse_at(k, &x)?;
                        Ok((v, c))
                    })
                    .collect()
            }
        }
    }

    fn sample_point(&self, eps1: T, cells: &[usize; 3], t: &Vec3<T>, cell: usize) -> Vec3<T> {
        let mut x = [T::zero(); 3];
        let mut r = cell;
        for a in 0..self.dim {
            x[a] = eps1 * (T::from_usize_exact(r % cells[a]) + t[a]);
            r /= cells[a];
        }
        x
    }

    /// Corrector and homogenized values `(v_c, q_c, ∂ₜu₀, curl u₀)` at fine
    /// quadrature point `q` of cell `c`.
    fn eval_qp(
        &self,
        k: usize,
        table: &[(Vec3<T>, Vec3<T>)],
        c: usize,
        q: usize,
        x: &Vec3<T>,
    ) -> Result<(Vec3<T>, Vec3<T>, Vec3<T>, Vec3<T>)> {
        let (d, cd) = (self.dim, self.cd);
        let qp = c * self.rule.len() + q;
        match &self.plan {
            Plan::Pointwise => {
                let (u, curl, g) = self.coarse_at(k, x)?;
                let kv = &self.vel[qp * d * d..(qp + 1) * d * d];
                let kc = &self.curl[qp * cd * cd..(qp + 1) * cd * cd];
                let mut diff = [T::zero(); 3];
                for a in 0..d {
                    diff[a] = u[a] - g[a];
                }
                let pv = apply(d, kv, &diff);
                let pc = apply(cd, kc, &curl);
                let mut v = u;
                let mut cc = curl;
                for a in 0..3 {
                    v[a] += pv[a];
                    cc[a] += pc[a];
                }
                Ok((v, cc, u, curl))
            }
            Plan::Folded { eps1, cells, t1, shared, g } => {
                let m = t1.len();
                let mut cell = 0;
                let mut stride = 1;
                for a in 0..d {
                    let i = ((x[a] / *eps1).floor().to_f64_lossy().max(0.0) as usize).min(cells[a] - 1);
                    cell += i * stride;
                    stride *= cells[a];
                }
                let mut v = [T::zero(); 3];
                let mut cc = [T::zero(); 3];
                let mut hv = [T::zero(); 3];
                let mut hc = [T::zero(); 3];
                for (j, (_, w)) in t1.iter().enumerate() {
                    let (u, curl) = table[cell * m + j];
                    let gj = g[cell * m + j];
                    let slot = if *shared { qp } else { qp * m + j };
                    let kv = &self.vel[slot * d * d..(slot + 1) * d * d];
                    let kc = &self.curl[slot * cd * cd..(slot + 1) * cd * cd];
                    let mut diff = [T::zero(); 3];
                    for a in 0..d {
                        diff[a] = u[a] - gj[a];
                    }
                    let pv = apply(d, kv, &diff);
                    let pc = apply(cd, kc, &curl);
                    for a in 0..3 {
                        v[a] += *w * (u[a] + pv[a]);
                        cc[a] += *w * (curl[a] + pc[a]);
                        hv[a] += *w * u[a];
                        hc[a] += *w * curl[a];
                    }
                }
                Ok((v, cc, hv, hc))
            }
        }
    }

    /// Corrector values at every fine quadrature point for stored stamp `k`.
    pub fn sample(&self, k: usize) -> Result<CorrectorSample<T>> {
        if k >= self.times.len() {
            return Err(Error::GridMismatch(format!("stamp {k} of {}", self.times.len())));
        }
        let table = self.stamp_table(k)?;
        let h = widths(&self.fine);
        let nq = self.rule.len();
        let rows: Vec<(Vec3<T>, Vec3<T>, Vec3<T>, Vec3<T>)> = (0..self.fine.num_cells() * nq)
            .into_par_iter()
            .map(|i| {
                let (c, q) = (i / nq, i % nq);
                let x = qp_point(&self.fine, &h, c, &self.rule.points[q]);
                self.eval_qp(k, &table, c, q, &x)
            })
            .collect::<Result<_>>()?;
        let mut out = CorrectorSample {
            time: self.times[k],
            velocity: Vec::with_capacity(rows.len()),
            curl: Vec::with_capacity(rows.len()),
            homogenized_velocity: Vec::with_capacity(rows.len()),
            homogenized_curl: Vec::with_capacity(rows.len()),
        };
        for (v, c, hv, hc) in rows {
            out.velocity.push(v);
            out.curl.push(c);
            out.homogenized_velocity.push(hv);
            out.homogenized_curl.push(hc);
        }
        Ok(out)
    }

    /// `(‖v − v_c‖, ‖curl u − q_c‖)` in `L²(D)` for a fine state at time `t`.
    pub fn stamp_error(&self, t: T, u: &[T], v: &[T]) -> Result<(T, T)> {
        let ndof = self.fine.num_edge_dofs();
        if u.len() != ndof || v.len() != ndof {
            return Err(Error::GridMismatch(format!(
                "fine state has {} / {} entries, mesh has {ndof} unknowns",
                u.len(),
                v.len()
            )));
        }
        let k = self.stamp_index(t)?;
        let table = self.stamp_table(k)?;
        let h = widths(&self.fine);
        let vol = self.fine.cell_volume();
        let (d, cd) = (self.dim, self.cd);
        let cells = self.fine.num_cells();
        let partial: Vec<(T, T)> = (0..cells.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut ev = T::zero();
                let mut ec = T::zero();
                for c in chunk * CHUNK..((chunk + 1) * CHUNK).min(cells) {
                    let lu = cell_dofs(&self.fine, u, c);
                    let lv = cell_dofs(&self.fine, v, c);
                    for (q, xi) in self.rule.points.iter().enumerate() {
                        let x = qp_point(&self.fine, &h, c, xi);
                        let (_, fc) = edge_field(d, &lu, xi, &h);
                        let (fv, _) = edge_field(d, &lv, xi, &h);
                        let (cv, cc, _, _) = self.eval_qp(k, &table, c, q, &x)?;
                        let w = self.rule.weights[q] * vol;
                        ev += w * (0..d).map(|a| (fv[a] - cv[a]) * (fv[a] - cv[a])).sum::<T>();
                        ec += w * (0..cd).map(|a| (fc[a] - cc[a]) * (fc[a] - cc[a])).sum::<T>();
                    }
                }
                Ok((ev, ec))
            })
            .collect::<Result<_>>()?;
        let (mut ev, mut ec) = (T::zero(), T::zero());
        for (a, b) in partial {
            ev += a;
            ec += b;
        }
        Ok((ev.sqrt(), ec.sqrt()))
    }
}

/// Pointwise corrector `yᵢ = {x/εᵢ}` of a homogenized run.
///
/// Refuses a nonzero `g0`: the corrector formulas assume a vanishing
/// initial displacement.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_corrector<T: Real>(
    u0: RunRef<'_, T>,
    hom: &HomogenizationResult<T>,
    schedule: &ScaleSchedule<T>,
    g0: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
    g1: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
    fine: &DomainMesh<T>,
    qpts: usize,
) -> Result<CorrectorField<T>> {
    check_inputs(&u0, hom, schedule, fine)?;
    check_g0(u0.mesh, g0)?;
    let mut field = CorrectorField::base(&u0, hom, g1, fine, qpts, Plan::Pointwise)?;
    let dim = hom.dim();
    field.fill_kernels(|x, _| kernel_at(hom, x, &schedule.fast_points(dim, x)));
    Ok(field)
}

/// Folded corrector `𝒰(Φ)`, integrated with `fold_qpts` Gauss points per
/// axis in each `tᵢ`.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_multiscale_corrector<T: Real>(
    u0: RunRef<'_, T>,
    hom: &HomogenizationResult<T>,
    schedule: &ScaleSchedule<T>,
    g0: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
    g1: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
    fine: &DomainMesh<T>,
    qpts: usize,
    fold_qpts: usize,
) -> Result<CorrectorField<T>> {
    check_inputs(&u0, hom, schedule, fine)?;
    check_g0(u0.mesh, g0)?;
    let dim = hom.dim();
    let cells = lattice_cells(schedule, fine.extents())?;
    let eps1 = schedule.base();
    let t1 = unfold::product_rule::<T>(dim, fold_qpts);
    let shared = !hom.depends_on_x();
    let mut field = CorrectorField::base(&u0, hom, g1, fine, qpts, Plan::Pointwise)?;
    let ncell: usize = cells[..dim].iter().product();
    let g = (0..ncell * t1.len())
        .map(|s| {
            let x = field.sample_point(eps1, &cells, &t1[s % t1.len()].0, s / t1.len());
            let (cell, xi) = field.coarse.locate(&x)?;
            let h = widths(&field.coarse);
            Ok(edge_field(dim, &cell_dofs(&field.coarse, &field.g1, cell), &xi, &h).0)
        })
        .collect::<Result<Vec<_>>>()?;
    field.slots = if shared { 1 } else { t1.len() };
    let n = schedule.levels();
    let inner = unfold::product_rule::<T>(dim, fold_qpts);
    let m = inner.len();
    let t1c = t1.clone();
    field.fill_kernels(|x, slot| {
        let mut ts = vec![[T::zero(); 3]; n];
        ts[0] = t1c[slot].0;
        let mut p = [[T::zero(); 3]; 3];
        let mut q = [[T::zero(); 3]; 3];
        for idx in 0..m.pow((n - 1) as u32) {
            let mut r = idx;
            let mut w = T::one();
            for t in ts.iter_mut().skip(1) {
                let (pt, wt) = inner[r % m];
                *t = pt;
                w *= wt;
                r /= m;
            }
            let (xs, ys) = fold_slots(schedule, dim, x, &ts);
            let (kp, kq) = kernel_at(hom, &xs, &ys);
            for a in 0..3 {
                for b in 0..3 {
                    p[a][b] += w * kp[a][b];
                    q[a][b] += w * kq[a][b];
                }
            }
        }
        (p, q)
    });
    field.plan = Plan::Folded { eps1, cells, t1, shared, g };
    Ok(field)
}

fn series<T: Real>(fine: RunRef<'_, T>, corr: &CorrectorField<T>) -> Result<CorrectorErrors<T>> {
    let f = corr.fine_mesh();
    if fine.mesh.dim() != f.dim() || fine.mesh.n() != f.n() || fine.mesh.extents() != f.extents() {
        return Err(Error::GridMismatch("fine trajectory mesh differs from the corrector mesh".into()));
    }
    let traj = fine.traj;
    if traj.u.len() != traj.times.len() || traj.v.len() != traj.times.len() {
        return Err(Error::GridMismatch("fine trajectory has inconsistent stamps".into()));
    }
    let rows: Vec<(T, T)> = (0..traj.times.len())
        .into_par_iter()
        .map(|k| corr.stamp_error(traj.times[k], &traj.u[k], &traj.v[k]))
        .collect::<Result<_>>()?;
    Ok(CorrectorErrors {
        times: traj.times.clone(),
        velocity: rows.iter().map(|r| r.0).collect(),
        curl: rows.iter().map(|r| r.1).collect(),
    })
}

/// Error series of the pointwise corrector against a fine run.
pub fn corrector_error<T: Real>(fine: RunRef<'_, T>, corr: &CorrectorField<T>) -> Result<CorrectorErrors<T>> {
    series(fine, corr)
}

/// `E_ms(t) = ‖∂ₜu^ε − 𝒰(Φ_vel)‖ + ‖curl u^ε − 𝒰(Φ_curl)‖` per stamp, with
/// 2-point Gauss rules on the fine cells and in each `tᵢ`.
pub fn multiscale_corrector_error<T: Real>(
    fine: RunRef<'_, T>,
    u0: RunRef<'_, T>,
    hom: &HomogenizationResult<T>,
    schedule: &ScaleSchedule<T>,
    g0: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
    g1: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
) -> Result<CorrectorErrors<T>> {
    let corr = reconstruct_multiscale_corrector(u0, hom, schedule, g0, g1, fine.mesh, 2, 2)?;
    series(fine, &corr)
}
