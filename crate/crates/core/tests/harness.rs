use maxhom::harness::config::{CoefficientsConfig, FieldConfig};
use maxhom::harness::{run, Mode, RunConfig};
use maxhom::{CoefficientField, CoefficientSpec, Error, Expression, Family, Layer, SymMat, TrigTerm};

fn base(mode: &str) -> String {
    format!(
        r#"
mode = "{mode}"

[problem]
dim = 2
levels = 1
extents = [1.0, 1.0]

[coefficients]
alpha = 0.5
beta = 3.0
a = {{ family = "constant", matrix = [[1.5]] }}
b = {{ family = "constant", matrix = [[2.0, 0.25], [0.25, 1.0]] }}

[scales]
epsilon = [0.25]

[mesh]
cell = [8]
fine_per_finest = 4
homogenized = 8

[time]
t_final = 0.125
dt = 0.03125
record_every = 2

[data]
g0 = "zero"
g1 = "zero"
forcing = "zero"

[solver]
rel_tol = 1e-10

[output]
metric = "pointwise"
probes = [0, 5]
"#
    )
}

#[test]
fn constant_spec_dumps_input_tensors() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::from_toml(&base("homogenize")).unwrap();
    let out = run(&config, dir.path()).unwrap();
    assert_eq!(out.mode, Mode::Homogenize);
    let text = std::fs::read_to_string(dir.path().join("tensors.txt")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(':').nth(1).unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(!rows.is_empty());
    for (line, r) in text.lines().filter(|l| !l.starts_with('#')).zip(&rows) {
        let expect: &[f64] = if line.starts_with('b') { &[2.0, 0.25, 1.0] } else { &[1.5] };
        assert_eq!(r.len(), expect.len());
        for (x, y) in r.iter().zip(expect) {
            assert!((x - y).abs() <= 1e-10, "{line}");
        }
    }
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains(&config.fingerprint()));
    assert!(manifest.contains("[coefficients.a]"), "{manifest}");
}

#[test]
fn zero_data_gives_zero_energy_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let text = base("simulate").replace("[output]", "[simulate]\nproblem = \"both\"\n\n[output]");
    let config = RunConfig::from_toml(&text).unwrap();
    run(&config, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,energy,u_0,u_5");
    let mut count = 0;
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[1..].iter().all(|&x| x == 0.0), "{l}");
        count += 1;
    }
    assert_eq!(count, 3);
    let errors = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_eq!(errors.lines().next().unwrap(), "eps,t,E_vel,E_curl,E_sum");
    for l in errors.lines().skip(1) {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(&v[2..], &[0.0, 0.0, 0.0]);
    }
    assert!(dir.path().join("trajectory_homogenized.csv").exists());
}

#[test]
fn sweep_needs_three_scales() {
    let text = base("sweep").replace("epsilon = [0.25]", "epsilon = [0.25, 0.125]");
    let err = RunConfig::from_toml(&text).unwrap().validate().unwrap_err();
    assert!(err.is_validation());
    assert!(err.to_string().contains("at least 3"), "{err}");
}

#[test]
fn unknown_keys_and_selectors_are_rejected() {
    let text = base("simulate").replace("[solver]", "[solver]\nmaxiter = 5");
    assert!(matches!(RunConfig::from_toml(&text), Err(Error::Config(_))));
    let text = base("simulate").replace("[problem]", "[problem]\ncolour = 1");
    assert!(RunConfig::from_toml(&text).is_err());
    let text = base("simulate").replace("g1 = \"zero\"", "g1 = \"gaussian\"");
    let err = RunConfig::from_toml(&text).unwrap().validate().unwrap_err();
    assert!(err.to_string().contains("data.g1"), "{err}");
    let text = base("simulate").replace("forcing = \"zero\"", "forcing = \"pulse\"");
    assert!(RunConfig::from_toml(&text).unwrap().validate().is_err());
}

#[test]
fn correctors_refuse_nonzero_displacement() {
    let text = base("sweep")
        .replace("epsilon = [0.25]", "epsilon = [0.25, 0.125, 0.0625]")
        .replace("g0 = \"zero\"", "g0 = \"cavity\"");
    let err = RunConfig::from_toml(&text).unwrap().validate().unwrap_err();
    assert!(err.to_string().contains("g0"), "{err}");
}

#[test]
fn canonical_form_round_trips() {
    let config = RunConfig::from_toml(&base("sweep")).unwrap();
    let again = RunConfig::from_toml(&config.canonical()).unwrap();
    assert_eq!(config, again);
    assert_eq!(config.fingerprint(), again.fingerprint());
    let other = RunConfig::from_toml(&base("sweep").replace("rel_tol = 1e-10", "rel_tol = 1e-9")).unwrap();
    assert_ne!(config.fingerprint(), other.fingerprint());
}

#[test]
fn coefficient_specs_convert_both_ways() {
    let a = CoefficientField::new(Family::Trigonometric {
        mean: 2.0,
        terms: vec![TrigTerm { level: 2, amplitude: 0.3, wavevector: [1, 2, 0], phase: 0.1 }],
        matrix: SymMat::scalar(1, 1.0),
    })
    .with_x_modulation(0.2);
    let b = CoefficientField::new(Family::SeparableProduct {
        layers: vec![Layer::new(1, 0, 2.0, 0.5), Layer::new(2, 1, 1.5, 0.25)],
        matrix: SymMat::diag(&[1.0, 2.0]),
    });
    let spec = CoefficientSpec::new(2, 2, a, b, 0.2, 10.0).unwrap();
    let cfg = CoefficientsConfig::from_spec(&spec).unwrap();
    let text = toml::to_string(&cfg).unwrap();
    let back: CoefficientsConfig = toml::from_str(&text).unwrap();
    assert_eq!(cfg, back);
    let a2 = back.a.to_field("a", 1, 2, 2).unwrap();
    let b2 = back.b.to_field("b", 2, 2, 2).unwrap();
    let spec2 = CoefficientSpec::new(2, 2, a2, b2, 0.2, 10.0).unwrap();
    let x = [0.3, 0.6, 0.0];
    let ys = [[0.1, 0.7, 0.0], [0.45, 0.2, 0.0]];
    for which in [maxhom::Which::A, maxhom::Which::B] {
        let u = spec.eval(which, &x, &ys).unwrap();
        let v = spec2.eval(which, &x, &ys).unwrap();
        assert_eq!(u, v);
    }

    let expr = Expression::parse("2 + math::sin(2 * pi * y1_1)", SymMat::scalar(1, 1.0), 2, 1).unwrap();
    let field = CoefficientField::new(Family::Expression(expr));
    match FieldConfig::from_field(&field).unwrap() {
        FieldConfig::Expression { source, matrix, .. } => {
            assert_eq!(source, "2 + math::sin(2 * pi * y1_1)");
            assert_eq!(matrix, vec![vec![1.0]]);
        }
        other => panic!("{other:?}"),
    }
    let closure = Expression::from_closure("c", maxhom::Dependence::none(1), |_, _| SymMat::scalar(1, 1.0));
    assert!(FieldConfig::from_field(&CoefficientField::new(Family::Expression(closure))).is_err());
}
