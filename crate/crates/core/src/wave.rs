//! Time-domain solver for `b ∂²u/∂t² + curl(a curl u) = f`, `u×ν = 0`.
//!
//! The semi-discrete system `M ü + K u = F` is advanced with the average
//! acceleration Newmark scheme written in velocity form:
//!
//! ```text
//! (M + Δt²/4 K) vₙ₊₁ = M vₙ − Δt K (uₙ + Δt/4 vₙ) + Δt/2 (Fₙ + Fₙ₊₁)
//! uₙ₊₁ = uₙ + Δt/2 (vₙ + vₙ₊₁)
//! ```
//!
//! For `f = 0` the energy `½(vᵀMv + uᵀKu)` is conserved up to the solver
//! tolerance.

use std::io::Write;
use std::sync::Arc;

use crate::cells::HomogenizationResult;
use crate::coeffs::{CoefficientSpec, ScaleSchedule, Which};
use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_curl_matrix, assemble_mass_matrix, edge_system};
use crate::fem::element::edge_field;
use crate::fem::quadrature::{gauss_legendre, TensorRule};
use crate::fem::{assemble_edge_load, edge_pattern, solve_spd_from, SparseSymSystem};
use crate::mesh::{local_edges, DomainMesh, Grid};
use crate::scalar::{dot, Real, Vec3};

pub type VectorFn<T> = Arc<dyn Fn(&Vec3<T>) -> Vec3<T> + Send + Sync>;
pub type TimeFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
pub type SpaceTimeFn<T> = Arc<dyn Fn(T, &Vec3<T>) -> Vec3<T> + Send + Sync>;

/// Right-hand side `f(t, x)`.
#[derive(Clone)]
pub enum Forcing<T> {
    Zero,
    /// `θ(t) F(x)`; the load of `F` is assembled once.
    Separable { theta: TimeFn<T>, field: VectorFn<T> },
    /// `θ(t) L` for a given discrete load vector `L`.
    Load { theta: TimeFn<T>, load: Vec<T> },
    /// General `f(t, x)`, assembled at every step.
    General(SpaceTimeFn<T>),
}

/// Initial data and forcing in closed form.
#[derive(Clone)]
pub struct WaveData<T> {
    pub g0: VectorFn<T>,
    pub g1: VectorFn<T>,
    pub forcing: Forcing<T>,
}

impl<T: Real> WaveData<T> {
    pub fn zero() -> Self {
        let z: VectorFn<T> = Arc::new(|_| [T::zero(); 3]);
        Self { g0: z.clone(), g1: z, forcing: Forcing::Zero }
    }
}

/// Time discretisation; every `record_every`-th state is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    pub t_final: T,
    pub dt: T,
    pub record_every: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_final: T, dt: T, record_every: usize) -> Result<Self> {
        if !(dt > T::zero()) || !(t_final >= dt) || record_every == 0 {
            return Err(Error::InvalidData(format!(
                "need dt > 0, T >= dt and record_every >= 1 (T = {t_final}, dt = {dt}, every = {record_every})"
            )));
        }
        Ok(Self { t_final, dt, record_every })
    }

    /// Number of steps: `T/Δt` rounded up, ignoring round-off below `1e-9`.
    pub fn steps(&self) -> usize {
        let r = (self.t_final / self.dt).to_f64_lossy();
        (r - 1e-9).ceil().max(1.0) as usize
    }
}

/// Which coefficients to use.
pub enum ProblemKind<'a, T> {
    Fine { spec: &'a CoefficientSpec<T>, schedule: &'a ScaleSchedule<T> },
    Homogenized { result: &'a HomogenizationResult<T> },
}

#[derive(Debug, Clone, Copy)]
pub struct WaveOptions<T> {
    pub rel_tol: T,
    /// Fine meshes must satisfy `h ≤ εₙ / resolution`.
    pub resolution: T,
}

impl<T: Real> Default for WaveOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(crate::fem::DEFAULT_REL_TOL), resolution: T::lit(4.0) }
    }
}

enum DiscreteForcing<T> {
    Zero,
    Scaled { theta: TimeFn<T>, load: Vec<T> },
    General { f: SpaceTimeFn<T>, qpts: usize },
}

/// Assembled problem with boundary edges eliminated.
pub struct WaveProblem<T> {
    pub mesh: DomainMesh<T>,
    pub mass: SparseSymSystem<T>,
    pub stiffness: SparseSymSystem<T>,
    pub g0: Vec<T>,
    pub g1: Vec<T>,
    pub time: TimeGrid<T>,
    pub rel_tol: T,
    forcing: DiscreteForcing<T>,
}

/// Degrees of freedom `∫_e g·t ds` of a closed-form field on all edges
/// (3-point Gauss along each edge).
pub fn interpolate_edges<T: Real>(mesh: &DomainMesh<T>, g: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync)) -> Vec<T> {
    let (p, w) = gauss_legendre::<T>(3);
    (0..mesh.num_edges())
        .map(|e| {
            let (dir, ijk) = mesh.edge_start(e);
            let mut x = [T::zero(); 3];
            for a in 0..mesh.dim() {
                x[a] = T::from_usize_exact(ijk[a]) * mesh.h(a);
            }
            let x0 = x[dir];
            let h = mesh.h(dir);
            let mut s = T::zero();
            for (t, wt) in p.iter().zip(&w) {
                x[dir] = x0 + *t * h;
                s += *wt * g(&x)[dir];
            }
            s * h
        })
        .collect()
}

/// Interior degrees of freedom of `g`; fails when `g` has a tangential trace.
pub fn interpolate_interior<T: Real>(
    mesh: &DomainMesh<T>,
    g: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
    name: &str,
) -> Result<Vec<T>> {
    let all = interpolate_edges(mesh, g);
    let scale = all.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::lit(1e-10) * scale.max(T::one()) * mesh.h(0);
    if let Some((e, v)) = all.iter().enumerate().find(|&(e, v)| mesh.is_boundary_edge(e) && v.abs() > tol) {
        return Err(Error::InvalidData(format!(
            "{name} has tangential trace {v:.3e} on boundary edge {e}; u×ν = 0 requires zero"
        )));
    }
    Ok(mesh.interior_edges().iter().map(|&e| all[e]).collect())
}

/// Local coefficients of cell `cell` from interior unknowns (boundary edges are zero).
pub fn cell_dofs<T: Real>(mesh: &DomainMesh<T>, dofs: &[T], cell: usize) -> [T; 12] {
    let edges = mesh.cell_edges(cell);
    let mut out = [T::zero(); 12];
    for (o, &e) in out.iter_mut().zip(edges.iter()).take(local_edges(mesh.dim())) {
        if let Some(d) = mesh.edge_dof(e) {
            *o = dofs[d];
        }
    }
    out
}

/// Value and curl (2D scalar curl in component 0) of a discrete field at `x`.
pub fn eval_edge_dofs<T: Real>(mesh: &DomainMesh<T>, dofs: &[T], x: &Vec3<T>) -> Result<(Vec3<T>, Vec3<T>)> {
    let (cell, xi) = mesh.locate(x)?;
    let h = [mesh.h(0), mesh.h(1), if mesh.dim() == 3 { mesh.h(2) } else { T::one() }];
    Ok(edge_field(mesh.dim(), &cell_dofs(mesh, dofs, cell), &xi, &h))
}

/// `‖u_h − u‖_{L²(D)}` by a `qpts`-point Gauss product rule per cell.
pub fn l2_distance<T: Real>(
    mesh: &DomainMesh<T>,
    dofs: &[T],
    exact: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
    qpts: usize,
) -> T {
    let dim = mesh.dim();
    let rule = TensorRule::<T>::new(dim, qpts);
    let h = [mesh.h(0), mesh.h(1), if dim == 3 { mesh.h(2) } else { T::one() }];
    let vol = mesh.cell_volume();
    let mut acc = T::zero();
    for c in 0..mesh.num_cells() {
        let local = cell_dofs(mesh, dofs, c);
        let o = mesh.cell_origin(c);
        for (xi, &w) in rule.points.iter().zip(&rule.weights) {
            let x = [o[0] + xi[0] * h[0], o[1] + xi[1] * h[1], o[2] + xi[2] * h[2]];
            let (v, _) = edge_field(dim, &local, xi, &h);
            let e = exact(&x);
            let d2 = (0..dim).map(|k| (v[k] - e[k]) * (v[k] - e[k])).sum::<T>();
            acc += w * vol * d2;
        }
    }
    acc.sqrt()
}

/// Assembles mass, stiffness, initial data and forcing.
pub fn setup_problem<T: Real>(
    kind: ProblemKind<'_, T>,
    mesh: DomainMesh<T>,
    data: &WaveData<T>,
    time: TimeGrid<T>,
    options: &WaveOptions<T>,
) -> Result<WaveProblem<T>> {
    let dim = mesh.dim();
    let pattern = edge_pattern(&mesh);
    let (mass, stiffness) = match kind {
        ProblemKind::Fine { spec, schedule } => {
            if spec.dim() != dim || schedule.levels() != spec.levels() {
                return Err(Error::DimensionMismatch(format!(
                    "spec (d = {}, n = {}), schedule n = {}, mesh d = {dim}",
                    spec.dim(),
                    spec.levels(),
                    schedule.levels()
                )));
            }
            let eps = schedule.finest();
            let hmax = (0..dim).map(|a| mesh.h(a)).fold(T::zero(), |m, h| m.max(h));
            if hmax > eps / options.resolution * (T::one() + T::lit(1e-9)) {
                let lmax = (0..dim).map(|a| mesh.extent(a)).fold(T::zero(), |m, l| m.max(l));
                let required = (lmax * options.resolution / eps - T::lit(1e-9)).ceil().to_f64_lossy() as usize;
                return Err(Error::UnderResolved { required, actual: mesh.n() });
            }
            let m = assemble_mass_matrix(
                &mesh,
                pattern.clone(),
                |x| spec.eval_fine(Which::B, schedule, x),
                spec.quadrature_points(Which::B),
            )?;
            let k = assemble_curl_matrix(
                &mesh,
                pattern,
                |x| spec.eval_fine(Which::A, schedule, x),
                spec.quadrature_points(Which::A),
            )?;
            (m, k)
        }
        ProblemKind::Homogenized { result } => {
            if result.dim() != dim {
                return Err(Error::DimensionMismatch(format!("homogenized result d = {}, mesh d = {dim}", result.dim())));
            }
            let m = assemble_mass_matrix(&mesh, pattern.clone(), |x| Ok(result.b0(x)), 2)?;
            let k = assemble_curl_matrix(&mesh, pattern, |x| Ok(result.a0(x)), 2)?;
            (m, k)
        }
    };
    let g0 = interpolate_interior(&mesh, &*data.g0, "g0")?;
    let g1 = interpolate_interior(&mesh, &*data.g1, "g1")?;
    let forcing = match &data.forcing {
        Forcing::Zero => DiscreteForcing::Zero,
        Forcing::Separable { theta, field } => {
            DiscreteForcing::Scaled { theta: theta.clone(), load: assemble_edge_load(&mesh, |x| field(x), 2) }
        }
        Forcing::Load { theta, load } => {
            if load.len() != mesh.num_edge_dofs() {
                return Err(Error::DimensionMismatch(format!(
                    "load has {} entries, mesh has {} interior edges",
                    load.len(),
                    mesh.num_edge_dofs()
                )));
            }
            DiscreteForcing::Scaled { theta: theta.clone(), load: load.clone() }
        }
        Forcing::General(f) => DiscreteForcing::General { f: f.clone(), qpts: 2 },
    };
    Ok(WaveProblem {
        mass: edge_system(&mesh, mass, false),
        stiffness: edge_system(&mesh, stiffness, false),
        mesh,
        g0,
        g1,
        time,
        rel_tol: options.rel_tol,
        forcing,
    })
}

/// Recorded states of one run.
#[derive(Debug, Clone, Default)]
pub struct WaveTrajectory<T> {
    pub times: Vec<T>,
    pub u: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    /// Energy at the recorded stamps.
    pub energy: Vec<T>,
    /// Energy after every step, starting with `t = 0`.
    pub step_energy: Vec<T>,
    pub dt: T,
}

/// Energy at every step and solver effort of a run.
#[derive(Debug, Clone, Default)]
pub struct RunLog<T> {
    pub step_energy: Vec<T>,
    pub solver_iterations: usize,
}

impl<T: Real> WaveProblem<T> {
    pub fn n(&self) -> usize {
        self.mass.n()
    }

    /// `½(vᵀMv + uᵀKu)`.
    pub fn energy(&self, u: &[T], v: &[T]) -> T {
        T::lit(0.5) * (dot(v, &self.mass.matrix.mul(v)) + dot(u, &self.stiffness.matrix.mul(u)))
    }

    fn load(&self, t: T) -> Option<Vec<T>> {
        match &self.forcing {
            DiscreteForcing::Zero => None,
            DiscreteForcing::Scaled { theta, load } => {
                let s = theta(t);
                Some(load.iter().map(|&v| s * v).collect())
            }
            DiscreteForcing::General { f, qpts } => Some(assemble_edge_load(&self.mesh, |x| f(t, x), *qpts)),
        }
    }

    /// Time step with initial state `(u0, v0)`; calls `observe(stamp, t, u, v, E)`
    /// at `t = 0` and after every `record_every`-th step (and the last one).
    pub fn integrate_from(
        &self,
        u0: Vec<T>,
        v0: Vec<T>,
        mut observe: impl FnMut(usize, T, &[T], &[T], T) -> Result<()>,
    ) -> Result<RunLog<T>> {
        let n = self.n();
        if u0.len() != n || v0.len() != n {
            return Err(Error::DimensionMismatch(format!("state of length {} for {n} unknowns", u0.len())));
        }
        let dt = self.time.dt;
        let steps = self.time.steps();
        let half = T::lit(0.5);
        let quarter = T::lit(0.25);
        let m = &self.mass.matrix;
        let k = &self.stiffness.matrix;
        let system = SparseSymSystem {
            matrix: m.combine(T::one(), k, dt * dt * quarter),
            nullspace: self.mass.nullspace,
            constraints: self.mass.constraints,
        };
        let mut u = u0;
        let mut v = v0;
        let mut v_prev = v.clone();
        let mut mv = m.mul(&v);
        let mut ku = k.mul(&u);
        let mut kv = k.mul(&v);
        let mut energy = half * (dot(&v, &mv) + dot(&u, &ku));
        let mut log = RunLog { step_energy: vec![energy], solver_iterations: 0 };
        observe(0, T::zero(), &u, &v, energy)?;
        let mut f_now = self.load(T::zero());
        let mut stamp = 1;
        let mut rhs = vec![T::zero(); n];
        for step in 1..=steps {
            let t_next = T::from_usize_exact(step) * dt;
            let f_next = self.load(t_next);
            for i in 0..n {
                rhs[i] = mv[i] - dt * (ku[i] + dt * quarter * kv[i]);
            }
            if let (Some(a), Some(b)) = (&f_now, &f_next) {
                for i in 0..n {
                    rhs[i] += dt * half * (a[i] + b[i]);
                }
            }
            let guess: Vec<T> = v.iter().zip(&v_prev).map(|(&a, &b)| a + a - b).collect();
            let (v_next, stats) = solve_spd_from(&system, &rhs, guess, self.rel_tol)?;
            log.solver_iterations += stats.iterations;
            for i in 0..n {
                u[i] += dt * half * (v[i] + v_next[i]);
            }
            v_prev = std::mem::replace(&mut v, v_next);
            m.spmv(&v, &mut mv);
            k.spmv(&u, &mut ku);
            k.spmv(&v, &mut kv);
            energy = half * (dot(&v, &mv) + dot(&u, &ku));
            log.step_energy.push(energy);
            f_now = f_next;
            if step % self.time.record_every == 0 || step == steps {
                observe(stamp, t_next, &u, &v, energy)?;
                stamp += 1;
            }
        }
        Ok(log)
    }

    /// Runs from the interpolated initial data `(g₀, g₁)`.
    pub fn integrate_observed(
        &self,
        observe: impl FnMut(usize, T, &[T], &[T], T) -> Result<()>,
    ) -> Result<RunLog<T>> {
        self.integrate_from(self.g0.clone(), self.g1.clone(), observe)
    }

    /// Stamp times the observer will see.
    pub fn stamp_times(&self) -> Vec<T> {
        let steps = self.time.steps();
        let mut out = vec![T::zero()];
        for step in 1..=steps {
            if step % self.time.record_every == 0 || step == steps {
                out.push(T::from_usize_exact(step) * self.time.dt);
            }
        }
        out
    }
}

/// Runs the problem and stores every recorded state.
pub fn integrate<T: Real>(problem: &WaveProblem<T>) -> Result<WaveTrajectory<T>> {
    let mut traj = WaveTrajectory { dt: problem.time.dt, ..Default::default() };
    let log = problem.integrate_observed(|_, t, u, v, e| {
        traj.times.push(t);
        traj.u.push(u.to_vec());
        traj.v.push(v.to_vec());
        traj.energy.push(e);
        Ok(())
    })?;
    traj.step_energy = log.step_energy;
    Ok(traj)
}

/// `½(vᵀMv + uᵀKu)` of a state of `problem`.
pub fn energy<T: Real>(problem: &WaveProblem<T>, u: &[T], v: &[T]) -> T {
    problem.energy(u, v)
}

/// CSV with columns `t, energy, u[probe]...` at the recorded stamps.
pub fn write_trajectory_csv<T: Real>(traj: &WaveTrajectory<T>, probes: &[usize], w: &mut impl Write) -> std::io::Result<()> {
    write!(w, "t,energy")?;
    for p in probes {
        write!(w, ",u_{p}")?;
    }
    writeln!(w)?;
    for (s, t) in traj.times.iter().enumerate() {
        write!(w, "{:.16e},{:.16e}", t.to_f64_lossy(), traj.energy[s].to_f64_lossy())?;
        for &p in probes {
            write!(w, ",{:.16e}", traj.u[s].get(p).map_or(f64::NAN, |v| v.to_f64_lossy()))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"MHSNAP01";

/// Binary snapshots, all little endian:
/// magic `MHSNAP01`; `u32` dimension; `u32` subdivisions; `dim × f64`
/// extents; `u64` unknowns; `u64` stamps; then per stamp `f64` time,
/// `unknowns × f64` of `u`, `unknowns × f64` of `∂u/∂t`.
pub fn write_snapshots<T: Real>(mesh: &DomainMesh<T>, traj: &WaveTrajectory<T>, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(mesh.dim() as u32).to_le_bytes())?;
    w.write_all(&(mesh.n() as u32).to_le_bytes())?;
    for &l in mesh.extents() {
        w.write_all(&l.to_f64_lossy().to_le_bytes())?;
    }
    w.write_all(&(mesh.num_edge_dofs() as u64).to_le_bytes())?;
    w.write_all(&(traj.times.len() as u64).to_le_bytes())?;
    for (s, t) in traj.times.iter().enumerate() {
        w.write_all(&t.to_f64_lossy().to_le_bytes())?;
        for v in traj.u[s].iter().chain(&traj.v[s]) {
            w.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{CoefficientField, Family, Layer};
    use crate::tensor::SymMat;

    fn unit_time() -> TimeGrid<f64> {
        TimeGrid::new(0.25, 1.0 / 32.0, 1).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let spec = CoefficientSpec::constant(2, 1, 1.0, 1.0).unwrap();
        let sched = ScaleSchedule::single(0.25).unwrap();
        let mesh = DomainMesh::unit(2, 16).unwrap();
        let p = setup_problem(
            ProblemKind::Fine { spec: &spec, schedule: &sched },
            mesh,
            &WaveData::zero(),
            unit_time(),
            &WaveOptions::default(),
        )
        .unwrap();
        let traj = integrate(&p).unwrap();
        assert_eq!(traj.times.len(), 9);
        assert!(traj.u.iter().chain(&traj.v).flatten().all(|&x| x == 0.0));
        assert!(traj.energy.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn under_resolved_fine_mesh_is_refused() {
        let spec = CoefficientSpec::constant(2, 1, 1.0, 1.0).unwrap();
        let sched = ScaleSchedule::single(0.25).unwrap();
        let err = setup_problem(
            ProblemKind::Fine { spec: &spec, schedule: &sched },
            DomainMesh::unit(2, 8).unwrap(),
            &WaveData::zero(),
            unit_time(),
            &WaveOptions::default(),
        )
        .err()
        .unwrap();
        assert!(matches!(err, Error::UnderResolved { required: 16, actual: 8 }), "{err}");
    }

    #[test]
    fn boundary_trace_is_rejected() {
        let mesh = DomainMesh::<f64>::unit(2, 4).unwrap();
        let bad = |_: &Vec3<f64>| [1.0, 0.0, 0.0];
        assert!(matches!(interpolate_interior(&mesh, &bad, "g1"), Err(Error::InvalidData(_))));
    }

    #[test]
    fn fine_constant_equals_homogenized_constant() {
        let spec = CoefficientSpec::constant(2, 1, 2.0, 3.0).unwrap();
        let sched = ScaleSchedule::single(0.25).unwrap();
        let hom = crate::cells::homogenize(
            &spec,
            &[4],
            &crate::cells::SlowSampling::unit(2, 2, 2),
            &crate::cells::HomogenizeOptions::default(),
        )
        .unwrap();
        let make = |kind| {
            setup_problem(kind, DomainMesh::unit(2, 16).unwrap(), &WaveData::zero(), unit_time(), &WaveOptions::default())
                .unwrap()
        };
        let a = make(ProblemKind::Fine { spec: &spec, schedule: &sched });
        let b = make(ProblemKind::Homogenized { result: &hom });
        assert_eq!(a.mass.matrix.values(), b.mass.matrix.values());
        assert_eq!(a.stiffness.matrix.values(), b.stiffness.matrix.values());
        assert_eq!(a.n(), 2 * 16 * 15);
    }

    #[test]
    fn energy_is_conserved_for_layered_media() {
        let spec = CoefficientSpec::new(
            2,
            1,
            CoefficientField::new(Family::Layered { layer: Layer::new(1, 0, 2.0, 1.0), matrix: SymMat::identity(1) }),
            CoefficientField::new(Family::Layered { layer: Layer::new(1, 1, 2.0, 1.0), matrix: SymMat::identity(2) }),
            1.0,
            3.0,
        )
        .unwrap();
        let sched = ScaleSchedule::single(0.25).unwrap();
        let pi = std::f64::consts::PI;
        let data = WaveData {
            g0: Arc::new(move |x: &Vec3<f64>| [-(pi * x[0]).cos() * (pi * x[1]).sin(), (pi * x[0]).sin() * (pi * x[1]).cos(), 0.0]),
            g1: Arc::new(|_: &Vec3<f64>| [0.0; 3]),
            forcing: Forcing::Zero,
        };
        let p = setup_problem(
            ProblemKind::Fine { spec: &spec, schedule: &sched },
            DomainMesh::unit(2, 16).unwrap(),
            &data,
            TimeGrid::new(2.0, 1.0 / 50.0, 10).unwrap(),
            &WaveOptions::default(),
        )
        .unwrap();
        let traj = integrate(&p).unwrap();
        let e0 = traj.step_energy[0];
        let drift = traj.step_energy.iter().map(|e| ((e - e0) / e0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-9, "{drift}");
        assert_eq!(traj.step_energy.len(), 101);
        assert_eq!(traj.times.len(), 11);
    }

    #[test]
    fn snapshot_layout() {
        let mesh = DomainMesh::<f64>::unit(2, 2).unwrap();
        let traj = WaveTrajectory {
            times: vec![0.0],
            u: vec![vec![1.0; 4]],
            v: vec![vec![2.0; 4]],
            energy: vec![0.0],
            step_energy: vec![0.0],
            dt: 0.1,
        };
        let mut buf = Vec::new();
        write_snapshots(&mesh, &traj, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 16 + 8 + 8 + 8 + 64);
        assert_eq!(&buf[..8], SNAPSHOT_MAGIC);
    }
}
