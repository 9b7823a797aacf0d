//! Run configuration in TOML with dotted sections.
//!
//! ```toml
//! mode = "sweep"                       # homogenize | simulate | sweep
//!
//! [problem]
//! dim = 2
//! levels = 1
//! extents = [1.0, 1.0]
//!
//! [coefficients]
//! alpha = 1.0
//! beta = 3.0
//! a = { family = "layered", matrix = [[1.0]], layer = { level = 1, axis = 0, mean = 2.0, amplitude = 1.0 } }
//! b = { family = "layered", matrix = [[1.0, 0.0], [0.0, 1.0]], layer = { level = 1, axis = 1, mean = 2.0, amplitude = 1.0 } }
//!
//! [scales]
//! epsilon = [0.125, 0.0625, 0.03125]   # ε₁ per run; simulate uses the first
//! ratios = []                          # r₂..rₙ
//!
//! [mesh]
//! cell = [32]                          # cell resolution per level
//! fine_per_finest = 32                 # fine cells per εₙ
//! homogenized = 64
//! slow_x_points = 2
//! slow_y_points = 2
//! resolution = 4.0                     # fine meshes must satisfy h ≤ εₙ/resolution
//!
//! [time]
//! t_final = 0.25
//! dt = 0.0009765625
//! record_every = 32
//!
//! [data]
//! g0 = "zero"
//! g1 = "benchmark"
//! forcing = "smooth"
//!
//! [solver]
//! rel_tol = 1e-8
//! cell_rel_tol = 1e-10
//!
//! [simulate]
//! problem = "both"                     # homogenized | fine | both
//!
//! [output]
//! metric = "pointwise"                 # pointwise | multiscale | cutoff
//! probes = [0]
//! workers = 1
//! ```
//!
//! Coefficient families: `constant`, `layered` (`layer`), `separable`
//! (`layers`), `trigonometric` (`mean`, `terms`) and `expression`
//! (`source`). Each takes a full symmetric `matrix` and an optional
//! `x_modulation`. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::registry;
use crate::coeffs::{curl_dim, CoefficientField, CoefficientSpec, Expression, Family, Layer, ScaleSchedule, TrigTerm};
use crate::error::{Error, Result};
use crate::tensor::SymMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Homogenize,
    Simulate,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulateProblem {
    Homogenized,
    Fine,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Pointwise,
    Multiscale,
    Cutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub problem: ProblemConfig,
    pub coefficients: CoefficientsConfig,
    pub scales: ScalesConfig,
    pub mesh: MeshConfig,
    pub time: TimeConfig,
    pub data: DataConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dim: usize,
    pub levels: usize,
    pub extents: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    pub alpha: f64,
    pub beta: f64,
    pub a: FieldConfig,
    pub b: FieldConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub level: usize,
    pub axis: usize,
    pub mean: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub level: usize,
    pub amplitude: f64,
    pub wavevector: [i32; 3],
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldConfig {
    Constant {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        x_modulation: f64,
    },
    Layered {
        matrix: Vec<Vec<f64>>,
        layer: LayerConfig,
        #[serde(default)]
        x_modulation: f64,
    },
    Separable {
        matrix: Vec<Vec<f64>>,
        layers: Vec<LayerConfig>,
        #[serde(default)]
        x_modulation: f64,
    },
    Trigonometric {
        matrix: Vec<Vec<f64>>,
        mean: f64,
        terms: Vec<TermConfig>,
        #[serde(default)]
        x_modulation: f64,
    },
    Expression {
        matrix: Vec<Vec<f64>>,
        source: String,
        #[serde(default)]
        x_modulation: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesConfig {
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub ratios: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub cell: Vec<usize>,
    pub fine_per_finest: usize,
    pub homogenized: usize,
    #[serde(default = "two")]
    pub slow_x_points: usize,
    #[serde(default = "two")]
    pub slow_y_points: usize,
    #[serde(default = "four")]
    pub resolution: f64,
}

fn two() -> usize {
    2
}

fn four() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub g0: String,
    pub g1: String,
    pub forcing: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub rel_tol: f64,
    #[serde(default = "cell_tol")]
    pub cell_rel_tol: f64,
}

fn cell_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub problem: SimulateProblem,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { problem: SimulateProblem::Homogenized }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub metric: Metric,
    #[serde(default)]
    pub probes: Vec<usize>,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { metric: Metric::Pointwise, probes: Vec::new(), workers: 1 }
    }
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| cfg(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical TOML of the resolved configuration, defaults filled in.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode.ok_or_else(|| cfg("`mode` is not set"))
    }

    /// Field-level checks that do not need any numerics.
    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        let p = &self.problem;
        if !(2..=3).contains(&p.dim) {
            return Err(cfg(format!("problem.dim must be 2 or 3, got {}", p.dim)));
        }
        if p.levels == 0 {
            return Err(cfg("problem.levels must be at least 1"));
        }
        if p.extents.len() != p.dim || p.extents.iter().any(|&l| !(l > 0.0)) {
            return Err(cfg(format!("problem.extents needs {} positive entries", p.dim)));
        }
        if self.scales.ratios.len() + 1 != p.levels {
            return Err(cfg(format!(
                "scales.ratios needs {} entries for {} levels, got {}",
                p.levels - 1,
                p.levels,
                self.scales.ratios.len()
            )));
        }
        if self.scales.epsilon.is_empty() {
            return Err(cfg("scales.epsilon is empty"));
        }
        if mode == Mode::Sweep {
            if self.scales.epsilon.len() < 3 {
                return Err(cfg(format!(
                    "sweep mode needs at least 3 values in scales.epsilon, got {}",
                    self.scales.epsilon.len()
                )));
            }
            let mut seen = self.scales.epsilon.clone();
            seen.sort_by(|a, b| a.total_cmp(b));
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(cfg("scales.epsilon has repeated values"));
            }
        }
        let m = &self.mesh;
        if m.cell.len() != p.levels || m.cell.contains(&0) {
            return Err(cfg(format!("mesh.cell needs {} positive entries", p.levels)));
        }
        if m.fine_per_finest == 0 || m.homogenized == 0 || m.slow_x_points == 0 || m.slow_y_points == 0 {
            return Err(cfg("mesh resolutions must be positive"));
        }
        if !(m.resolution > 0.0) {
            return Err(cfg("mesh.resolution must be positive"));
        }
        if (m.fine_per_finest as f64) < m.resolution {
            return Err(cfg(format!(
                "mesh.fine_per_finest = {} is below mesh.resolution = {}",
                m.fine_per_finest, m.resolution
            )));
        }
        let t = &self.time;
        if !(t.dt > 0.0) || !(t.t_final >= t.dt) || t.record_every == 0 {
            return Err(cfg("time needs dt > 0, t_final >= dt and record_every >= 1"));
        }
        if !(self.solver.rel_tol > 0.0 && self.solver.rel_tol < 1.0) {
            return Err(cfg("solver.rel_tol must lie in (0, 1)"));
        }
        if !(self.solver.cell_rel_tol > 0.0 && self.solver.cell_rel_tol < 1.0) {
            return Err(cfg("solver.cell_rel_tol must lie in (0, 1)"));
        }
        if self.output.workers == 0 {
            return Err(cfg("output.workers must be at least 1"));
        }
        for (key, name) in [("data.g0", &self.data.g0), ("data.g1", &self.data.g1)] {
            if !registry::FIELDS.contains(&name.as_str()) {
                return Err(cfg(format!("{key}: unknown field `{name}` (known: {})", registry::FIELDS.join(", "))));
            }
        }
        if !registry::FORCINGS.contains(&self.data.forcing.as_str()) {
            return Err(cfg(format!(
                "data.forcing: unknown forcing `{}` (known: {})",
                self.data.forcing,
                registry::FORCINGS.join(", ")
            )));
        }
        let corrects = mode == Mode::Sweep || (mode == Mode::Simulate && self.simulate.problem == SimulateProblem::Both);
        if corrects && self.data.g0 != "zero" {
            return Err(cfg("correctors need data.g0 = \"zero\" (vanishing initial displacement)"));
        }
        for eps in &self.scales.epsilon {
            self.schedule(*eps)?;
        }
        self.spec()?;
        Ok(())
    }

    pub fn schedule(&self, eps: f64) -> Result<ScaleSchedule<f64>> {
        ScaleSchedule::new(eps, self.scales.ratios.clone(), false)
    }

    pub fn spec(&self) -> Result<CoefficientSpec<f64>> {
        let p = &self.problem;
        let c = &self.coefficients;
        let a = c.a.to_field("coefficients.a", curl_dim(p.dim), p.dim, p.levels)?;
        let b = c.b.to_field("coefficients.b", p.dim, p.dim, p.levels)?;
        CoefficientSpec::new(p.dim, p.levels, a, b, c.alpha, c.beta)
    }

    /// Fine mesh cells per axis for base scale `eps`.
    pub fn fine_cells(&self, eps: f64) -> Result<usize> {
        let finest = self.schedule(eps)?.finest();
        let lmax = self.problem.extents.iter().copied().fold(0.0, f64::max);
        let n = self.mesh.fine_per_finest as f64 * lmax / finest;
        Ok((n - 1e-9).ceil() as usize)
    }
}

fn layer(l: &LayerConfig) -> Layer<f64> {
    Layer { level: l.level, axis: l.axis, mean: l.mean, amplitude: l.amplitude, phase: l.phase }
}

fn layer_config(l: &Layer<f64>) -> LayerConfig {
    LayerConfig { level: l.level, axis: l.axis, mean: l.mean, amplitude: l.amplitude, phase: l.phase }
}

fn rows(m: &SymMat<f64>) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect()).collect()
}

impl FieldConfig {
    fn matrix_rows(&self) -> &[Vec<f64>] {
        match self {
            FieldConfig::Constant { matrix, .. }
            | FieldConfig::Layered { matrix, .. }
            | FieldConfig::Separable { matrix, .. }
            | FieldConfig::Trigonometric { matrix, .. }
            | FieldConfig::Expression { matrix, .. } => matrix,
        }
    }

    fn x_modulation(&self) -> f64 {
        match self {
            FieldConfig::Constant { x_modulation, .. }
            | FieldConfig::Layered { x_modulation, .. }
            | FieldConfig::Separable { x_modulation, .. }
            | FieldConfig::Trigonometric { x_modulation, .. }
            | FieldConfig::Expression { x_modulation, .. } => *x_modulation,
        }
    }

    pub fn to_field(&self, key: &str, mdim: usize, dim: usize, levels: usize) -> Result<CoefficientField<f64>> {
        let rows = self.matrix_rows();
        if rows.len() != mdim || rows.iter().any(|r| r.len() != mdim) {
            return Err(cfg(format!("{key}.matrix must be {mdim}x{mdim}")));
        }
        let matrix = SymMat::from_rows(rows).ok_or_else(|| cfg(format!("{key}.matrix is not symmetric")))?;
        let family = match self {
            FieldConfig::Constant { .. } => Family::Constant { matrix },
            FieldConfig::Layered { layer: l, .. } => Family::Layered { layer: layer(l), matrix },
            FieldConfig::Separable { layers, .. } => {
                Family::SeparableProduct { layers: layers.iter().map(layer).collect(), matrix }
            }
            FieldConfig::Trigonometric { mean, terms, .. } => Family::Trigonometric {
                mean: *mean,
                terms: terms
                    .iter()
                    .map(|t| TrigTerm { level: t.level, amplitude: t.amplitude, wavevector: t.wavevector, phase: t.phase })
                    .collect(),
                matrix,
            },
            FieldConfig::Expression { source, .. } => Family::Expression(
                Expression::parse(source, matrix, dim, levels).map_err(|e| cfg(format!("{key}.source: {e}")))?,
            ),
        };
        Ok(CoefficientField::new(family).with_x_modulation(self.x_modulation()))
    }

    /// Inverse of [`FieldConfig::to_field`]. Closure-built expressions have
    /// no source text and are rejected.
    pub fn from_field(field: &CoefficientField<f64>) -> Result<Self> {
        let x_modulation = field.x_modulation;
        Ok(match &field.family {
            Family::Constant { matrix } => FieldConfig::Constant { matrix: rows(matrix), x_modulation },
            Family::Layered { layer, matrix } => {
                FieldConfig::Layered { matrix: rows(matrix), layer: layer_config(layer), x_modulation }
            }
            Family::SeparableProduct { layers, matrix } => FieldConfig::Separable {
                matrix: rows(matrix),
                layers: layers.iter().map(layer_config).collect(),
                x_modulation,
            },
            Family::Trigonometric { mean, terms, matrix } => FieldConfig::Trigonometric {
                matrix: rows(matrix),
                mean: *mean,
                terms: terms
                    .iter()
                    .map(|t| TermConfig { level: t.level, amplitude: t.amplitude, wavevector: t.wavevector, phase: t.phase })
                    .collect(),
                x_modulation,
            },
            Family::Expression(e) => {
                let matrix = e
                    .matrix
                    .clone()
                    .ok_or_else(|| cfg("expression coefficient has no source text to serialize"))?;
                FieldConfig::Expression { matrix: rows(&matrix), source: e.source.clone(), x_modulation }
            }
        })
    }
}

impl CoefficientsConfig {
    pub fn from_spec(spec: &CoefficientSpec<f64>) -> Result<Self> {
        use crate::coeffs::Which;
        Ok(Self {
            alpha: spec.alpha(),
            beta: spec.beta(),
            a: FieldConfig::from_field(spec.field(Which::A))?,
            b: FieldConfig::from_field(spec.field(Which::B))?,
        })
    }
}
