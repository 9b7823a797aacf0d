//! Configuration-driven pipelines: homogenize, simulate and ε-sweeps.
//!
//! Every mode writes `manifest.txt` (version, fingerprint, runtimes and the
//! resolved configuration). Depending on the mode it adds `tensors.txt`,
//! `trajectory.csv`, `errors.csv` and `report.csv`. CSV files carry no
//! timing information, so identical configurations give identical bytes.

pub mod config;
pub mod registry;
pub mod report;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use config::{Metric, Mode, RunConfig, SimulateProblem};
pub use report::{fit_slope, ConvergenceReport, ReportEntry};

use crate::cells::{homogenize, HomogenizationResult, HomogenizeOptions, SlowSampling};
use crate::coeffs::{CoefficientSpec, ScaleSchedule};
use crate::corrector::{
    cutoff_corrector_error, reconstruct_corrector, reconstruct_multiscale_corrector, CorrectorField, RunRef,
};
use crate::error::{Error, Result};
use crate::mesh::DomainMesh;
use crate::wave::{
    integrate, setup_problem, write_trajectory_csv, ProblemKind, TimeGrid, VectorFn, WaveData, WaveOptions,
    WaveTrajectory,
};

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode: Mode,
    pub files: Vec<PathBuf>,
    pub report: Option<ConvergenceReport>,
}

impl RunOutcome {
    /// A sweep with at least one failed ε.
    pub fn partial(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.partial())
    }
}

/// Error series of one ε.
#[derive(Debug, Clone, Default)]
struct Series {
    times: Vec<f64>,
    vel: Vec<f64>,
    curl: Vec<f64>,
}

impl Series {
    fn max(v: &[f64]) -> f64 {
        v.iter().copied().fold(0.0, f64::max)
    }

    fn entry(&self, eps: f64, metric: Metric, runtime: f64) -> ReportEntry {
        let e_vel = Self::max(&self.vel);
        let e_curl = Self::max(&self.curl);
        let e_total = match metric {
            Metric::Multiscale => {
                Self::max(&self.vel.iter().zip(&self.curl).map(|(a, b)| a + b).collect::<Vec<_>>())
            }
            _ => e_vel + e_curl,
        };
        ReportEntry { eps, e_vel, e_curl, e_total, runtime }
    }
}

struct Shared<'a> {
    config: &'a RunConfig,
    spec: CoefficientSpec<f64>,
    data: WaveData<f64>,
    time: TimeGrid<f64>,
    options: WaveOptions<f64>,
}

impl Shared<'_> {
    fn new(config: &RunConfig) -> Result<Shared<'_>> {
        let dim = config.problem.dim;
        let d = &config.data;
        let t = &config.time;
        Ok(Shared {
            config,
            spec: config.spec()?,
            data: registry::wave_data(&d.g0, &d.g1, &d.forcing, dim)?,
            time: TimeGrid::new(t.t_final, t.dt, t.record_every)?,
            options: WaveOptions { rel_tol: config.solver.rel_tol, resolution: config.mesh.resolution },
        })
    }

    fn homogenize(&self) -> Result<HomogenizationResult<f64>> {
        let m = &self.config.mesh;
        let sampling = SlowSampling {
            x_points: m.slow_x_points,
            y_points: m.slow_y_points,
            extents: self.config.problem.extents.clone(),
        };
        homogenize(&self.spec, &m.cell, &sampling, &HomogenizeOptions { rel_tol: self.config.solver.cell_rel_tol })
    }

    fn coarse_mesh(&self) -> Result<DomainMesh<f64>> {
        let p = &self.config.problem;
        DomainMesh::new(p.dim, self.config.mesh.homogenized, &p.extents)
    }

    fn fine_mesh(&self, eps: f64) -> Result<DomainMesh<f64>> {
        let p = &self.config.problem;
        DomainMesh::new(p.dim, self.config.fine_cells(eps)?, &p.extents)
    }

    fn run_homogenized(&self, hom: &HomogenizationResult<f64>) -> Result<(DomainMesh<f64>, WaveTrajectory<f64>)> {
        let mesh = self.coarse_mesh()?;
        let problem =
            setup_problem(ProblemKind::Homogenized { result: hom }, mesh.clone(), &self.data, self.time, &self.options)?;
        Ok((mesh, integrate(&problem)?))
    }
}

/// Per-stamp error evaluation against a fixed homogenized run.
enum StampMetric<'a> {
    Field(CorrectorField<f64>),
    Cutoff {
        fine: DomainMesh<f64>,
        coarse: RunRef<'a, f64>,
        hom: &'a HomogenizationResult<f64>,
        schedule: ScaleSchedule<f64>,
        g0: VectorFn<f64>,
        g1: VectorFn<f64>,
    },
}

impl<'a> StampMetric<'a> {
    fn new(
        metric: Metric,
        coarse: RunRef<'a, f64>,
        hom: &'a HomogenizationResult<f64>,
        schedule: ScaleSchedule<f64>,
        data: &WaveData<f64>,
        fine: &DomainMesh<f64>,
    ) -> Result<Self> {
        let (g0, g1) = (&*data.g0, &*data.g1);
        Ok(match metric {
            Metric::Pointwise => StampMetric::Field(reconstruct_corrector(coarse, hom, &schedule, g0, g1, fine, 2)?),
            Metric::Multiscale => {
                StampMetric::Field(reconstruct_multiscale_corrector(coarse, hom, &schedule, g0, g1, fine, 2, 2)?)
            }
            Metric::Cutoff => StampMetric::Cutoff {
                fine: fine.clone(),
                coarse,
                hom,
                schedule,
                g0: data.g0.clone(),
                g1: data.g1.clone(),
            },
        })
    }

    fn eval(&self, t: f64, u: &[f64], v: &[f64]) -> Result<(f64, f64)> {
        match self {
            StampMetric::Field(corr) => corr.stamp_error(t, u, v),
            StampMetric::Cutoff { fine, coarse, hom, schedule, g0, g1 } => {
                let one = WaveTrajectory { times: vec![t], u: vec![u.to_vec()], v: vec![v.to_vec()], ..Default::default() };
                let e = cutoff_corrector_error(RunRef::new(fine, &one), *coarse, hom, schedule, &**g0, &**g1, 2)?;
                Ok((e.velocity[0], e.curl[0]))
            }
        }
    }
}

fn create(out: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = out.join(name);
    let f = File::create(&path)?;
    files.push(path);
    Ok(BufWriter::new(f))
}

fn write_errors(w: &mut impl Write, rows: &[(f64, &Series)]) -> std::io::Result<()> {
    writeln!(w, "eps,t,E_vel,E_curl,E_sum")?;
    for (eps, s) in rows {
        for k in 0..s.times.len() {
            writeln!(
                w,
                "{eps:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.times[k],
                s.vel[k],
                s.curl[k],
                s.vel[k] + s.curl[k]
            )?;
        }
    }
    Ok(())
}

fn check_probes(probes: &[usize], n: usize) -> Result<()> {
    match probes.iter().find(|&&p| p >= n) {
        Some(p) => Err(Error::Config(format!("output.probes: dof {p} out of range for {n} unknowns"))),
        None => Ok(()),
    }
}

struct Manifest {
    text: String,
}

impl Manifest {
    fn new(config: &RunConfig, mode: Mode) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "maxhom {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "mode = {mode:?}");
        let _ = writeln!(text, "fingerprint = {}", config.fingerprint());
        Self { text }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn runtime(&mut self, what: &str, start: Instant) {
        self.line(format!("runtime {what} = {:.3} s", start.elapsed().as_secs_f64()));
    }

    fn finish(mut self, config: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
        self.line("\n# resolved configuration");
        self.text.push_str(&config.canonical());
        let mut w = create(out, "manifest.txt", files)?;
        w.write_all(self.text.as_bytes())?;
        w.flush()?;
        Ok(())
    }
}

/// Validates `config`, runs its mode and writes the artifacts to `out`.
///
/// Failed ε of a sweep do not abort the run: the remaining runs complete,
/// the report is flagged partial and the failures are listed in the
/// manifest.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let mode = config.mode()?;
    std::fs::create_dir_all(out)?;
    let shared = Shared::new(config)?;
    let mut files = Vec::new();
    let mut manifest = Manifest::new(config, mode);
    let start = Instant::now();
    let hom = shared.homogenize()?;
    manifest.runtime("homogenize", start);
    {
        let mut w = create(out, "tensors.txt", &mut files)?;
        hom.write_tensors(&mut w)?;
        w.flush()?;
    }
    let report = match mode {
        Mode::Homogenize => None,
        Mode::Simulate => {
            simulate(&shared, &hom, out, &mut files, &mut manifest)?;
            None
        }
        Mode::Sweep => Some(sweep(&shared, &hom, out, &mut files, &mut manifest)?),
    };
    manifest.finish(config, out, &mut files)?;
    Ok(RunOutcome { mode, files, report })
}

fn simulate(
    shared: &Shared<'_>,
    hom: &HomogenizationResult<f64>,
    out: &Path,
    files: &mut Vec<PathBuf>,
    manifest: &mut Manifest,
) -> Result<()> {
    let config = shared.config;
    let which = config.simulate.problem;
    let eps = config.scales.epsilon[0];
    let probes = &config.output.probes;
    let coarse = if which != SimulateProblem::Fine {
        let start = Instant::now();
        let run = shared.run_homogenized(hom)?;
        manifest.runtime("homogenized run", start);
        Some(run)
    } else {
        None
    };
    let fine = if which != SimulateProblem::Homogenized {
        let start = Instant::now();
        let schedule = config.schedule(eps)?;
        let mesh = shared.fine_mesh(eps)?;
        let problem = setup_problem(
            ProblemKind::Fine { spec: &shared.spec, schedule: &schedule },
            mesh.clone(),
            &shared.data,
            shared.time,
            &shared.options,
        )?;
        let traj = integrate(&problem)?;
        manifest.runtime("fine run", start);
        Some((schedule, mesh, traj))
    } else {
        None
    };
    let write_traj = |name: &str, traj: &WaveTrajectory<f64>, files: &mut Vec<PathBuf>| -> Result<()> {
        check_probes(probes, traj.u.first().map_or(0, |u| u.len()))?;
        let mut w = create(out, name, files)?;
        write_trajectory_csv(traj, probes, &mut w)?;
        w.flush()?;
        Ok(())
    };
    match (&coarse, &fine) {
        (Some((_, t)), None) => write_traj("trajectory.csv", t, files)?,
        (None, Some((_, _, t))) => write_traj("trajectory.csv", t, files)?,
        (Some((cm, ct)), Some((schedule, fm, ft))) => {
            write_traj("trajectory.csv", ft, files)?;
            write_traj("trajectory_homogenized.csv", ct, files)?;
            let start = Instant::now();
            let metric =
                StampMetric::new(config.output.metric, RunRef::new(cm, ct), hom, schedule.clone(), &shared.data, fm)?;
            let mut s = Series::default();
            for k in 0..ft.times.len() {
                let (a, b) = metric.eval(ft.times[k], &ft.u[k], &ft.v[k])?;
                s.times.push(ft.times[k]);
                s.vel.push(a);
                s.curl.push(b);
            }
            manifest.runtime("corrector error", start);
            let mut w = create(out, "errors.csv", files)?;
            write_errors(&mut w, &[(eps, &s)])?;
            w.flush()?;
        }
        (None, None) => unreachable!(),
    }
    Ok(())
}

fn sweep_one(
    shared: &Shared<'_>,
    hom: &HomogenizationResult<f64>,
    coarse: RunRef<'_, f64>,
    eps: f64,
) -> Result<(Series, f64)> {
    let start = Instant::now();
    let config = shared.config;
    let schedule = config.schedule(eps)?;
    let mesh = shared.fine_mesh(eps)?;
    let metric = StampMetric::new(config.output.metric, coarse, hom, schedule.clone(), &shared.data, &mesh)?;
    let problem = setup_problem(
        ProblemKind::Fine { spec: &shared.spec, schedule: &schedule },
        mesh,
        &shared.data,
        shared.time,
        &shared.options,
    )?;
    let mut s = Series::default();
    problem.integrate_observed(|_, t, u, v, _| {
        let (a, b) = metric.eval(t, u, v)?;
        s.times.push(t);
        s.vel.push(a);
        s.curl.push(b);
        Ok(())
    })?;
    log::info!("eps = {eps}: E_vel = {:.4e}, E_curl = {:.4e}", Series::max(&s.vel), Series::max(&s.curl));
    Ok((s, start.elapsed().as_secs_f64()))
}

fn sweep(
    shared: &Shared<'_>,
    hom: &HomogenizationResult<f64>,
    out: &Path,
    files: &mut Vec<PathBuf>,
    manifest: &mut Manifest,
) -> Result<ConvergenceReport> {
    let config = shared.config;
    let start = Instant::now();
    let (cm, ct) = shared.run_homogenized(hom)?;
    manifest.runtime("homogenized run", start);
    let coarse = RunRef::new(&cm, &ct);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.output.workers)
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start {} workers: {e}", config.output.workers)))?;
    let eps_list = &config.scales.epsilon;
    let results: Vec<Result<(Series, f64)>> =
        pool.install(|| eps_list.par_iter().map(|&eps| sweep_one(shared, hom, coarse, eps)).collect());
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    let mut done = Vec::new();
    for (&eps, r) in eps_list.iter().zip(results) {
        match r {
            Ok((s, runtime)) => {
                manifest.line(format!("runtime fine run eps = {eps:e} = {runtime:.3} s"));
                entries.push(s.entry(eps, config.output.metric, runtime));
                done.push((eps, s));
            }
            Err(e) => {
                log::error!("eps = {eps}: {e}");
                manifest.line(format!("failed eps = {eps:e}: {e}"));
                failures.push((eps, e.to_string()));
            }
        }
    }
    let report = ConvergenceReport::new(entries, failures, config.fingerprint());
    manifest.line(format!("partial = {}", report.partial()));
    match report.slope {
        Some(s) => manifest.line(format!("slope = {s:.16e}")),
        None => manifest.line("slope = none"),
    }
    let rows: Vec<(f64, &Series)> = done.iter().map(|(e, s)| (*e, s)).collect();
    let mut w = create(out, "errors.csv", files)?;
    write_errors(&mut w, &rows)?;
    w.flush()?;
    let mut w = create(out, "report.csv", files)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(report)
}
