use std::f64::consts::PI;
use std::sync::Arc;

use maxhom::corrector::{
    corrector_error, cutoff_corrector_error, multiscale_corrector_error, reconstruct_corrector,
    reconstruct_multiscale_corrector, RunRef,
};
use maxhom::wave::{integrate, setup_problem, Forcing, ProblemKind, TimeGrid, WaveData, WaveOptions, WaveTrajectory};
use maxhom::{
    homogenize, CoefficientField, CoefficientSpec, DomainMesh, Error, Family, HomogenizationResult, HomogenizeOptions,
    Layer, ScaleSchedule, SlowSampling, SymMat, Vec3,
};

fn zero(_: &Vec3<f64>) -> Vec3<f64> {
    [0.0; 3]
}

fn soft_g1(x: &Vec3<f64>) -> Vec3<f64> {
    [-0.5 * (PI * x[0]).cos() * (PI * x[1]).sin(), 0.5 * (PI * x[0]).sin() * (PI * x[1]).cos(), 0.0]
}

fn data() -> WaveData<f64> {
    WaveData { g0: Arc::new(zero), g1: Arc::new(soft_g1), forcing: Forcing::Zero }
}

fn layered(amp: f64) -> CoefficientSpec<f64> {
    let a = CoefficientField::new(Family::Layered { layer: Layer::new(1, 0, 2.0, amp), matrix: SymMat::scalar(1, 1.0) });
    let b = CoefficientField::new(Family::Layered { layer: Layer::new(1, 1, 2.0, amp), matrix: SymMat::identity(2) });
    CoefficientSpec::new(2, 1, a, b, 2.0 - amp, 2.0 + amp).unwrap()
}

fn hom_of(spec: &CoefficientSpec<f64>, cell: usize) -> HomogenizationResult<f64> {
    homogenize(spec, &vec![cell; spec.levels()], &SlowSampling::unit(2, 2, 2), &HomogenizeOptions::default()).unwrap()
}

fn run_hom(hom: &HomogenizationResult<f64>, n: usize, time: TimeGrid<f64>) -> (DomainMesh<f64>, WaveTrajectory<f64>) {
    let mesh = DomainMesh::unit(2, n).unwrap();
    let p = setup_problem(ProblemKind::Homogenized { result: hom }, mesh.clone(), &data(), time, &WaveOptions::default())
        .unwrap();
    (mesh, integrate(&p).unwrap())
}

fn run_fine(
    spec: &CoefficientSpec<f64>,
    schedule: &ScaleSchedule<f64>,
    n: usize,
    time: TimeGrid<f64>,
) -> (DomainMesh<f64>, WaveTrajectory<f64>) {
    let mesh = DomainMesh::unit(2, n).unwrap();
    let p = setup_problem(ProblemKind::Fine { spec, schedule }, mesh.clone(), &data(), time, &WaveOptions::default())
        .unwrap();
    (mesh, integrate(&p).unwrap())
}

fn short() -> TimeGrid<f64> {
    TimeGrid::new(0.125, 1.0 / 64.0, 4).unwrap()
}

#[test]
fn constant_coefficients_collapse_to_homogenized_fields() {
    let spec = CoefficientSpec::constant(2, 1, 1.5, 2.0).unwrap();
    let hom = hom_of(&spec, 8);
    let (cm, ct) = run_hom(&hom, 8, short());
    let schedule = ScaleSchedule::single(0.125).unwrap();
    let fine = DomainMesh::unit(2, 32).unwrap();
    for corr in [
        reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &fine, 2).unwrap(),
        reconstruct_multiscale_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &fine, 2, 2)
            .unwrap(),
    ] {
        for k in 0..corr.times().len() {
            let s = corr.sample(k).unwrap();
            assert_eq!(s.velocity, s.homogenized_velocity);
            assert_eq!(s.curl, s.homogenized_curl);
        }
    }
}

#[test]
fn initial_velocity_corrector_is_the_interpolated_data() {
    let spec = layered(1.0);
    let hom = hom_of(&spec, 32);
    let (cm, ct) = run_hom(&hom, 16, short());
    let schedule = ScaleSchedule::single(0.25).unwrap();
    let fine = DomainMesh::unit(2, 32).unwrap();
    let corr = reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &fine, 2).unwrap();
    let s = corr.sample(0).unwrap();
    assert_eq!(s.time, 0.0);
    assert_eq!(s.velocity, s.homogenized_velocity);
    let h = 1.0 / 16.0;
    for (x, v) in corr.quadrature_points().iter().zip(&s.velocity) {
        let g = soft_g1(x);
        for a in 0..2 {
            assert!((v[a] - g[a]).abs() <= 2.0 * h, "{x:?}");
        }
    }
}

#[test]
fn layered_curl_corrector_follows_the_closed_form() {
    let spec = layered(1.0);
    let hom = hom_of(&spec, 128);
    let (cm, ct) = run_hom(&hom, 16, short());
    let schedule = ScaleSchedule::single(0.25).unwrap();
    let fine = DomainMesh::unit(2, 32).unwrap();
    let corr = reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &fine, 2).unwrap();
    let s = corr.sample(corr.times().len() - 1).unwrap();
    let mut checked = 0;
    for (x, (q, c0)) in corr.quadrature_points().iter().zip(s.curl.iter().zip(&s.homogenized_curl)) {
        let y = (x[0] / 0.25).fract();
        let a = 2.0 + (2.0 * PI * y).sin();
        let expect = c0[0] * 3f64.sqrt() / a;
        assert!((q[0] - expect).abs() <= 2e-2 * c0[0].abs() + 1e-12, "{x:?}: {} vs {expect}", q[0]);
        checked += 1;
    }
    assert_eq!(checked, 32 * 32 * 4);
}

#[test]
fn identical_runs_have_zero_error() {
    let spec = CoefficientSpec::constant(2, 1, 1.0, 1.0).unwrap();
    let hom = hom_of(&spec, 4);
    let (cm, ct) = run_hom(&hom, 16, short());
    let schedule = ScaleSchedule::single(0.25).unwrap();
    let corr = reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &cm, 2).unwrap();
    let e = corrector_error(RunRef::new(&cm, &ct), &corr).unwrap();
    assert_eq!(e.times, ct.times);
    assert!(e.velocity.iter().chain(&e.curl).all(|&v| v <= 1e-13), "{e:?}");
}

#[test]
fn errors_are_nonnegative_and_report_the_stamp_maximum() {
    let spec = layered(1.0);
    let hom = hom_of(&spec, 32);
    let (cm, ct) = run_hom(&hom, 16, short());
    let schedule = ScaleSchedule::single(0.25).unwrap();
    let (fm, ft) = run_fine(&spec, &schedule, 32, short());
    let corr = reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &fm, 2).unwrap();
    let e = corrector_error(RunRef::new(&fm, &ft), &corr).unwrap();
    assert!(e.velocity.iter().chain(&e.curl).all(|&v| v >= 0.0 && v.is_finite()));
    assert_eq!(e.max_velocity(), e.velocity.iter().copied().fold(0.0, f64::max));
    assert_eq!(e.max_curl(), e.curl.iter().copied().fold(0.0, f64::max));
    assert!(e.velocity.contains(&e.max_velocity()));
    assert_eq!(e.total(), e.max_velocity() + e.max_curl());
    let mut csv = Vec::new();
    e.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,E_vel,E_curl,E_ms");
    assert_eq!(csv.lines().count(), e.times.len() + 1);
}

#[test]
fn mismatched_grids_are_rejected() {
    let spec = layered(1.0);
    let hom = hom_of(&spec, 16);
    let (cm, ct) = run_hom(&hom, 8, short());
    let schedule = ScaleSchedule::single(0.25).unwrap();
    let (fm, ft) = run_fine(&spec, &schedule, 16, TimeGrid::new(0.125, 1.0 / 48.0, 4).unwrap());
    let corr = reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &fm, 2).unwrap();
    assert!(matches!(corrector_error(RunRef::new(&fm, &ft), &corr), Err(Error::GridMismatch(_))));
    let (gm, gt) = run_fine(&spec, &schedule, 32, short());
    assert!(matches!(corrector_error(RunRef::new(&gm, &gt), &corr), Err(Error::GridMismatch(_))));
    let bad = DomainMesh::new(2, 16, &[1.0, 2.0]).unwrap();
    assert!(reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &bad, 2).is_err());
}

#[test]
fn nonzero_initial_displacement_is_refused() {
    let spec = layered(1.0);
    let hom = hom_of(&spec, 16);
    let (cm, ct) = run_hom(&hom, 8, short());
    let schedule = ScaleSchedule::single(0.25).unwrap();
    let fine = DomainMesh::unit(2, 16).unwrap();
    let g0 = |x: &Vec3<f64>| soft_g1(x);
    let err = reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &g0, &soft_g1, &fine, 2).unwrap_err();
    assert!(matches!(err, Error::NonzeroInitialDisplacement(_)), "{err}");
    let err = multiscale_corrector_error(RunRef::new(&fine, &ct), RunRef::new(&cm, &ct), &hom, &schedule, &g0, &soft_g1)
        .unwrap_err();
    assert!(matches!(err, Error::NonzeroInitialDisplacement(_)), "{err}");
}

#[test]
fn constant_coefficient_errors_shrink_with_the_discretization() {
    let spec = CoefficientSpec::constant(2, 1, 1.0, 1.0).unwrap();
    let hom = hom_of(&spec, 4);
    let schedule = ScaleSchedule::single(0.25).unwrap();
    let mut errs = Vec::new();
    for (nc, nf, dt) in [(8, 16, 1.0 / 32.0), (16, 32, 1.0 / 64.0)] {
        let time = TimeGrid::new(0.25, dt, 8).unwrap();
        let (cm, ct) = run_hom(&hom, nc, time);
        let (fm, ft) = run_fine(&spec, &schedule, nf, time);
        let corr = reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &fm, 2).unwrap();
        errs.push(corrector_error(RunRef::new(&fm, &ft), &corr).unwrap().total());
    }
    assert!(errs[0] < 0.1, "{errs:?}");
    assert!(errs[1] < 0.6 * errs[0], "{errs:?}");
}

// The x-slot of 𝒰 averages over each ε₁-cell, so even with constant
// coefficients E_ms carries a first-order term in ε₁ on top of the
// discretization error.
#[test]
fn constant_coefficient_multiscale_error_is_first_order_in_eps() {
    let spec = CoefficientSpec::constant(2, 1, 1.0, 1.0).unwrap();
    let hom = hom_of(&spec, 4);
    let time = TimeGrid::new(0.125, 1.0 / 128.0, 16).unwrap();
    let (cm, ct) = run_hom(&hom, 64, time);
    let mut errs = Vec::new();
    for inv in [4usize, 8, 16] {
        let schedule = ScaleSchedule::single(1.0 / inv as f64).unwrap();
        let e = multiscale_corrector_error(RunRef::new(&cm, &ct), RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1)
            .unwrap();
        errs.push(e.max_total());
    }
    for w in errs.windows(2) {
        let r = w[1] / w[0];
        assert!((0.4..0.6).contains(&r), "{errs:?}");
    }
}

#[test]
fn single_scale_multiscale_error_tracks_the_pointwise_error() {
    let spec = layered(1.6);
    let hom = hom_of(&spec, 32);
    let time = TimeGrid::new(0.25, 1.0 / 128.0, 8).unwrap();
    let (cm, ct) = run_hom(&hom, 64, time);
    let schedule = ScaleSchedule::single(0.125).unwrap();
    let (fm, ft) = run_fine(&spec, &schedule, 128, time);
    let corr = reconstruct_corrector(RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, &fm, 2).unwrap();
    let pointwise = corrector_error(RunRef::new(&fm, &ft), &corr).unwrap().max_total();
    let folded =
        multiscale_corrector_error(RunRef::new(&fm, &ft), RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1)
            .unwrap()
            .max_total();
    assert!(folded <= 2.0 * pointwise && pointwise <= 2.0 * folded, "{pointwise} vs {folded}");
}

#[test]
fn cutoff_corrector_is_restricted_and_finite() {
    let spec = layered(1.0);
    let hom = hom_of(&spec, 32);
    let (cm, ct) = run_hom(&hom, 16, short());
    let schedule = ScaleSchedule::single(0.25).unwrap();
    let (fm, ft) = run_fine(&spec, &schedule, 32, short());
    let e = cutoff_corrector_error(RunRef::new(&fm, &ft), RunRef::new(&cm, &ct), &hom, &schedule, &zero, &soft_g1, 2)
        .unwrap();
    assert_eq!(e.times.len(), ft.times.len());
    assert!(e.velocity.iter().chain(&e.curl).all(|v| v.is_finite() && *v >= 0.0));
    let plain = corr_total(&hom, &schedule, (&cm, &ct), (&fm, &ft));
    assert!(e.total() < 4.0 * plain && plain < 4.0 * e.total());

    let two = CoefficientSpec::new(
        2,
        2,
        CoefficientField::constant(SymMat::scalar(1, 1.0)),
        CoefficientField::new(Family::Layered { layer: Layer::new(2, 0, 2.0, 1.0), matrix: SymMat::identity(2) }),
        1.0,
        3.0,
    )
    .unwrap();
    let hom2 = hom_of(&two, 8);
    let s2 = ScaleSchedule::new(0.25, vec![2], true).unwrap();
    let err = cutoff_corrector_error(RunRef::new(&fm, &ft), RunRef::new(&cm, &ct), &hom2, &s2, &zero, &soft_g1, 2)
        .unwrap_err();
    assert!(matches!(err, Error::Unsupported(_) | Error::DimensionMismatch(_)), "{err}");
}

fn corr_total(
    hom: &HomogenizationResult<f64>,
    schedule: &ScaleSchedule<f64>,
    coarse: (&DomainMesh<f64>, &WaveTrajectory<f64>),
    fine: (&DomainMesh<f64>, &WaveTrajectory<f64>),
) -> f64 {
    let corr = reconstruct_corrector(RunRef::new(coarse.0, coarse.1), hom, schedule, &zero, &soft_g1, fine.0, 2).unwrap();
    corrector_error(RunRef::new(fine.0, fine.1), &corr).unwrap().total()
}
