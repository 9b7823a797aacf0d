use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"
[problem]
dim = 2
levels = 1
extents = [1.0, 1.0]

[coefficients]
alpha = 1.0
beta = 3.0
a = { family = "layered", matrix = [[1.0]], layer = { level = 1, axis = 0, mean = 2.0, amplitude = 1.0 } }
b = { family = "layered", matrix = [[1.0, 0.0], [0.0, 1.0]], layer = { level = 1, axis = 1, mean = 2.0, amplitude = 1.0 } }

[scales]
epsilon = [0.5, 0.25, 0.125]

[mesh]
cell = [16]
fine_per_finest = 8
homogenized = 8

[time]
t_final = 0.125
dt = 0.03125
record_every = 2

[data]
g0 = "zero"
g1 = "benchmark"
forcing = "smooth"

[solver]
rel_tol = 1e-10

[output]
metric = "pointwise"
"#;

fn maxhom(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_maxhom")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_writes_reproducible_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let mut reports = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(name);
        let o = maxhom(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", workers]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        for f in ["manifest.txt", "tensors.txt", "errors.csv", "report.csv"] {
            assert!(out.join(f).exists(), "{f}");
        }
        reports.push(std::fs::read(out.join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let text = String::from_utf8(reports[0].clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "eps,E_vel,E_curl,E_total,slope");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn homogenize_and_simulate_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("h");
    let o = maxhom(&["homogenize", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(out.join("tensors.txt").exists());
    let out = dir.path().join("s");
    let o = maxhom(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--tol", "1e-9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("trajectory.csv").exists());
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("rel_tol = 0.000000001"), "{manifest}");
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("[solver]", "[solver]\nbogus = 1"));
    let o = maxhom(&["homogenize", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), &CONFIG.replace("epsilon = [0.5, 0.25, 0.125]", "epsilon = [0.5, 0.25]"));
    let o = maxhom(&["sweep", "--config", &cfg, "--out", dir.path().join("y").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = maxhom(&["sweep", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), &format!("mode = \"sweep\"\n{CONFIG}"));
    let o = maxhom(&["simulate", "--config", &cfg, "--out", dir.path().join("z").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // No CG run reaches a relative residual of 1e-300 in f64.
    let cfg = write_config(dir.path(), CONFIG);
    let o = maxhom(&["simulate", "--config", &cfg, "--out", dir.path().join("n").to_str().unwrap(), "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
