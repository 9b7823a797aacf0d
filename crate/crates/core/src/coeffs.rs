//! Multiscale coefficient fields `a(x, y₁, …, yₙ)` and `b(x, y₁, …, yₙ)`.
//!
//! Builtin families are a scalar profile times a constant symmetric matrix,
//! optionally modulated by a smooth factor in the slow variable `x`. The
//! expression family accepts an arbitrary closure (or a parsed formula) and
//! is only checked by sampling.
//!
//! In two dimensions the curl of a vector field is a scalar, so the curl
//! coefficient `a` is stored as a 1×1 matrix while `b` stays 2×2.

use std::fmt;
use std::sync::Arc;

use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec3};
use crate::tensor::SymMat;

/// Selects the curl coefficient `a` or the mass coefficient `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    A,
    B,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::A => "a",
            Which::B => "b",
        }
    }
}

/// `mean + amplitude · sin(2π y_level[axis] + phase)`, `level` counted from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub level: usize,
    pub axis: usize,
    pub mean: T,
    pub amplitude: T,
    pub phase: T,
}

impl<T: Real> Layer<T> {
    pub fn new(level: usize, axis: usize, mean: T, amplitude: T) -> Self {
        Self { level, axis, mean, amplitude, phase: T::zero() }
    }

    #[inline]
    fn eval(&self, ys: &[Vec3<T>]) -> T {
        let two_pi = T::lit(2.0) * T::PI();
        self.mean + self.amplitude * (two_pi * ys[self.level - 1][self.axis] + self.phase).sin()
    }
}

/// `amplitude · cos(2π k·y_level + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm<T> {
    pub level: usize,
    pub amplitude: T,
    pub wavevector: [i32; 3],
    pub phase: T,
}

/// Dependence of a field on each component of each variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependence {
    pub x: [bool; 3],
    /// One entry per microscopic level.
    pub y: Vec<[bool; 3]>,
}

impl Dependence {
    pub fn none(levels: usize) -> Self {
        Self { x: [false; 3], y: vec![[false; 3]; levels] }
    }

    pub fn all(dim: usize, levels: usize) -> Self {
        let mut mask = [false; 3];
        mask[..dim].iter_mut().for_each(|m| *m = true);
        Self { x: mask, y: vec![mask; levels] }
    }

    pub fn union(&self, other: &Self) -> Self {
        let or = |a: [bool; 3], b: [bool; 3]| [a[0] || b[0], a[1] || b[1], a[2] || b[2]];
        Self {
            x: or(self.x, other.x),
            y: self.y.iter().zip(&other.y).map(|(&a, &b)| or(a, b)).collect(),
        }
    }

    pub fn depends_on_x(&self) -> bool {
        self.x.iter().any(|&b| b)
    }

    pub fn depends_on_level(&self, level: usize) -> bool {
        self.y[level - 1].iter().any(|&b| b)
    }
}

pub type ExprFn<T> = Arc<dyn Fn(&Vec3<T>, &[Vec3<T>]) -> SymMat<T> + Send + Sync>;

/// General coefficient given by a closure. `dependence` must over-approximate
/// the variables the closure reads; it drives slow-variable sampling.
#[derive(Clone)]
pub struct Expression<T> {
    pub source: String,
    pub func: ExprFn<T>,
    pub dependence: Dependence,
    /// Matrix multiplying a parsed formula; `None` for closures.
    pub matrix: Option<SymMat<T>>,
}

impl<T> fmt::Debug for Expression<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Expression").field("source", &self.source).finish()
    }
}

impl<T: Real> Expression<T> {
    pub fn from_closure(
        source: impl Into<String>,
        dependence: Dependence,
        func: impl Fn(&Vec3<T>, &[Vec3<T>]) -> SymMat<T> + Send + Sync + 'static,
    ) -> Self {
        Self { source: source.into(), func: Arc::new(func), dependence, matrix: None }
    }

    /// Parses a scalar formula multiplying `matrix`. Variables are `x1..x3`
    /// for the slow point and `y<level>_<axis>` (both 1-based) for the fast
    /// points, plus the constant `pi`; functions use the `math::` namespace
    /// (`math::sin`, `math::cos`, `math::exp`, ...).
    pub fn parse(source: &str, matrix: SymMat<T>, dim: usize, levels: usize) -> Result<Self> {
        let tree: Node<DefaultNumericTypes> =
            evalexpr::build_operator_tree(source).map_err(|e| Error::Expression(e.to_string()))?;
        let mut dependence = Dependence::none(levels);
        for ident in tree.iter_variable_identifiers() {
            match parse_variable(ident, dim, levels) {
                Some(Var::X(axis)) => dependence.x[axis] = true,
                Some(Var::Y(level, axis)) => dependence.y[level][axis] = true,
                Some(Var::Pi) => {}
                None => return Err(Error::Expression(format!("unknown variable `{ident}`"))),
            }
        }
        let tree = Arc::new(tree);
        let probe = eval_tree(&tree, &[0.5; 3], &vec![[0.25; 3]; levels], dim)?;
        if !probe.is_finite() {
            return Err(Error::Expression(format!("`{source}` is not finite at a probe point")));
        }
        let func = move |x: &Vec3<T>, ys: &[Vec3<T>]| {
            let xf = [x[0].to_f64_lossy(), x[1].to_f64_lossy(), x[2].to_f64_lossy()];
            let yf: Vec<[f64; 3]> = ys
                .iter()
                .map(|y| [y[0].to_f64_lossy(), y[1].to_f64_lossy(), y[2].to_f64_lossy()])
                .collect();
            let s = eval_tree(&tree, &xf, &yf, dim).unwrap_or(f64::NAN);
            matrix.scale(T::lit(s))
        };
        Ok(Self { source: source.to_string(), func: Arc::new(func), dependence, matrix: Some(matrix) })
    }
}

enum Var {
    X(usize),
    Y(usize, usize),
    Pi,
}

fn parse_variable(ident: &str, dim: usize, levels: usize) -> Option<Var> {
    if ident == "pi" {
        return Some(Var::Pi);
    }
    if let Some(rest) = ident.strip_prefix('x') {
        let axis: usize = rest.parse().ok()?;
        return (1..=dim).contains(&axis).then_some(Var::X(axis - 1));
    }
    let rest = ident.strip_prefix('y')?;
    let (level, axis) = rest.split_once('_')?;
    let (level, axis): (usize, usize) = (level.parse().ok()?, axis.parse().ok()?);
    ((1..=levels).contains(&level) && (1..=dim).contains(&axis)).then_some(Var::Y(level - 1, axis - 1))
}

fn eval_tree(tree: &Node<DefaultNumericTypes>, x: &[f64; 3], ys: &[[f64; 3]], dim: usize) -> Result<f64> {
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    let set = |ctx: &mut HashMapContext<DefaultNumericTypes>, name: String, v: f64| {
        ctx.set_value(name, Value::Float(v)).map_err(|e| Error::Expression(e.to_string()))
    };
    set(&mut ctx, "pi".into(), std::f64::consts::PI)?;
    for a in 0..dim {
        set(&mut ctx, format!("x{}", a + 1), x[a])?;
        for (l, y) in ys.iter().enumerate() {
            set(&mut ctx, format!("y{}_{}", l + 1, a + 1), y[a])?;
        }
    }
    tree.eval_number_with_context(&ctx).map_err(|e| Error::Expression(e.to_string()))
}

/// Family of a coefficient field.
#[derive(Debug, Clone)]
pub enum Family<T> {
    Constant { matrix: SymMat<T> },
    Layered { layer: Layer<T>, matrix: SymMat<T> },
    Trigonometric { mean: T, terms: Vec<TrigTerm<T>>, matrix: SymMat<T> },
    SeparableProduct { layers: Vec<Layer<T>>, matrix: SymMat<T> },
    Expression(Expression<T>),
}

impl<T: Real> Family<T> {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::Layered { .. } => "layered",
            Family::Trigonometric { .. } => "trigonometric",
            Family::SeparableProduct { .. } => "separable-product",
            Family::Expression(_) => "expression",
        }
    }
}

/// Coefficient field: a family plus an optional slow modulation
/// `1 + m · Π_k sin(π x_k)` over the unit box.
#[derive(Debug, Clone)]
pub struct CoefficientField<T> {
    pub family: Family<T>,
    pub x_modulation: T,
}

impl<T: Real> CoefficientField<T> {
    pub fn new(family: Family<T>) -> Self {
        Self { family, x_modulation: T::zero() }
    }

    pub fn constant(matrix: SymMat<T>) -> Self {
        Self::new(Family::Constant { matrix })
    }

    pub fn with_x_modulation(mut self, m: T) -> Self {
        self.x_modulation = m;
        self
    }

    fn matrix_dim(&self) -> Option<usize> {
        match &self.family {
            Family::Constant { matrix }
            | Family::Layered { matrix, .. }
            | Family::Trigonometric { matrix, .. }
            | Family::SeparableProduct { matrix, .. } => Some(matrix.dim()),
            Family::Expression(_) => None,
        }
    }

    /// Evaluation without bound checks; `ys` must already be reduced mod 1.
    pub fn eval_raw(&self, dim: usize, x: &Vec3<T>, ys: &[Vec3<T>]) -> SymMat<T> {
        let base = match &self.family {
            Family::Constant { matrix } => *matrix,
            Family::Layered { layer, matrix } => matrix.scale(layer.eval(ys)),
            Family::Trigonometric { mean, terms, matrix } => {
                let two_pi = T::lit(2.0) * T::PI();
                let mut s = *mean;
                for term in terms {
                    let y = &ys[term.level - 1];
                    let mut phase = term.phase;
                    for k in 0..dim {
                        phase += two_pi * T::lit(term.wavevector[k] as f64) * y[k];
                    }
                    s += term.amplitude * phase.cos();
                }
                matrix.scale(s)
            }
            Family::SeparableProduct { layers, matrix } => {
                matrix.scale(layers.iter().fold(T::one(), |acc, l| acc * l.eval(ys)))
            }
            Family::Expression(expr) => (expr.func)(x, ys),
        };
        if self.x_modulation == T::zero() {
            base
        } else {
            let mut f = T::one();
            for k in 0..dim {
                f *= (T::PI() * x[k]).sin();
            }
            base.scale(T::one() + self.x_modulation * f)
        }
    }

    pub fn dependence(&self, dim: usize, levels: usize) -> Dependence {
        let mut dep = Dependence::none(levels);
        let mark = |dep: &mut Dependence, l: &Layer<T>| {
            if l.amplitude != T::zero() {
                dep.y[l.level - 1][l.axis] = true;
            }
        };
        match &self.family {
            Family::Constant { .. } => {}
            Family::Layered { layer, .. } => mark(&mut dep, layer),
            Family::SeparableProduct { layers, .. } => layers.iter().for_each(|l| mark(&mut dep, l)),
            Family::Trigonometric { terms, .. } => {
                for t in terms.iter().filter(|t| t.amplitude != T::zero()) {
                    for k in 0..dim {
                        if t.wavevector[k] != 0 {
                            dep.y[t.level - 1][k] = true;
                        }
                    }
                }
            }
            Family::Expression(expr) => dep = expr.dependence.clone(),
        }
        if self.x_modulation != T::zero() {
            dep.x[..dim].iter_mut().for_each(|b| *b = true);
        }
        dep
    }

    fn validate(&self, name: &str, dim: usize, mat_dim: usize, levels: usize) -> Result<()> {
        if let Some(md) = self.matrix_dim() {
            if md != mat_dim {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient `{name}` matrix is {md}×{md}, expected {mat_dim}×{mat_dim}"
                )));
            }
        }
        let check_layer = |l: &Layer<T>| -> Result<()> {
            if l.level == 0 || l.level > levels || l.axis >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient `{name}` layer refers to level {} axis {} (levels = {levels}, dim = {dim})",
                    l.level, l.axis
                )));
            }
            Ok(())
        };
        match &self.family {
            Family::Layered { layer, .. } => check_layer(layer)?,
            Family::SeparableProduct { layers, .. } => layers.iter().try_for_each(check_layer)?,
            Family::Trigonometric { terms, .. } => {
                if let Some(t) = terms.iter().find(|t| t.level == 0 || t.level > levels) {
                    return Err(Error::DimensionMismatch(format!(
                        "coefficient `{name}` trigonometric term refers to level {}",
                        t.level
                    )));
                }
            }
            Family::Expression(expr) => {
                if expr.dependence.y.len() != levels {
                    return Err(Error::DimensionMismatch(format!(
                        "expression `{}` declares {} levels, expected {levels}",
                        expr.source,
                        expr.dependence.y.len()
                    )));
                }
            }
            Family::Constant { .. } => {}
        }
        Ok(())
    }
}

/// Full coefficient description for a `levels`-scale problem in `dim`
/// dimensions with declared spectral bounds `alpha ≤ λ ≤ beta`.
#[derive(Debug, Clone)]
pub struct CoefficientSpec<T> {
    dim: usize,
    levels: usize,
    a: CoefficientField<T>,
    b: CoefficientField<T>,
    alpha: T,
    beta: T,
}

impl<T: Real> CoefficientSpec<T> {
    pub fn new(
        dim: usize,
        levels: usize,
        a: CoefficientField<T>,
        b: CoefficientField<T>,
        alpha: T,
        beta: T,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::DimensionMismatch(format!("dimension must be 2 or 3, got {dim}")));
        }
        if levels == 0 {
            return Err(Error::DimensionMismatch("at least one microscopic scale is required".into()));
        }
        if !(alpha > T::zero()) || beta < alpha {
            return Err(Error::Config(format!("bounds must satisfy 0 < alpha <= beta, got ({alpha}, {beta})")));
        }
        a.validate("a", dim, curl_dim(dim), levels)?;
        b.validate("b", dim, dim, levels)?;
        Ok(Self { dim, levels, a, b, alpha, beta })
    }

    /// Constant coefficients `a = a_value · I`, `b = b_value · I`.
    pub fn constant(dim: usize, levels: usize, a_value: T, b_value: T) -> Result<Self> {
        let lo = a_value.min(b_value);
        let hi = a_value.max(b_value);
        Self::new(
            dim,
            levels,
            CoefficientField::constant(SymMat::scalar(curl_dim(dim), a_value)),
            CoefficientField::constant(SymMat::scalar(dim, b_value)),
            lo,
            hi,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn field(&self, which: Which) -> &CoefficientField<T> {
        match which {
            Which::A => &self.a,
            Which::B => &self.b,
        }
    }

    /// Matrix size of the curl coefficient: 1 in 2D, 3 in 3D.
    pub fn curl_dim(&self) -> usize {
        curl_dim(self.dim)
    }

    pub fn matrix_dim(&self, which: Which) -> usize {
        match which {
            Which::A => self.curl_dim(),
            Which::B => self.dim,
        }
    }

    pub fn is_constant(&self, which: Which) -> bool {
        let f = self.field(which);
        matches!(f.family, Family::Constant { .. }) && f.x_modulation == T::zero()
    }

    pub fn dependence(&self, which: Which) -> Dependence {
        self.field(which).dependence(self.dim, self.levels)
    }

    /// Union of the dependences of `a` and `b`.
    pub fn joint_dependence(&self) -> Dependence {
        self.dependence(Which::A).union(&self.dependence(Which::B))
    }

    /// Gauss points per axis used when integrating against this field.
    pub fn quadrature_points(&self, which: Which) -> usize {
        match self.field(which).family {
            Family::Trigonometric { .. } => 3,
            _ => 2,
        }
    }

    /// Evaluates the field at `(x, y₁, …, yₙ)`; the fast points are reduced
    /// modulo 1 here. Fails when the result leaves `[alpha, beta]`.
    pub fn eval(&self, which: Which, x: &Vec3<T>, ys: &[Vec3<T>]) -> Result<SymMat<T>> {
        if ys.len() != self.levels {
            return Err(Error::DimensionMismatch(format!(
                "expected {} fast points, got {}",
                self.levels,
                ys.len()
            )));
        }
        let mut reduced = [[T::zero(); 3]; 8];
        let reduced = if self.levels <= reduced.len() {
            for (r, y) in reduced.iter_mut().zip(ys) {
                for k in 0..self.dim {
                    r[k] = y[k].frac();
                }
            }
            &reduced[..self.levels]
        } else {
            return Err(Error::DimensionMismatch("at most 8 microscopic levels are supported".into()));
        };
        let m = self.field(which).eval_raw(self.dim, x, reduced);
        self.check_bounds(which, &m)?;
        Ok(m)
    }

    /// `a^ε(x)` or `b^ε(x)`: the field at `(x, x/ε₁, …, x/εₙ)`.
    pub fn eval_fine(&self, which: Which, schedule: &ScaleSchedule<T>, x: &Vec3<T>) -> Result<SymMat<T>> {
        let ys = schedule.fast_points(self.dim, x);
        self.eval(which, x, &ys)
    }

    pub(crate) fn check_bounds(&self, which: Which, m: &SymMat<T>) -> Result<()> {
        let (lo, hi) = m.min_max_eigenvalue();
        let slack = T::lit(1e-12) * self.beta;
        let bad = if !(lo >= self.alpha - slack) {
            Some(lo)
        } else if !(hi <= self.beta + slack) {
            Some(hi)
        } else {
            None
        };
        match bad {
            Some(value) => Err(Error::BoundsViolation {
                which: which.name(),
                value: value.to_f64_lossy(),
                alpha: self.alpha.to_f64_lossy(),
                beta: self.beta.to_f64_lossy(),
            }),
            None => Ok(()),
        }
    }
}

pub fn curl_dim(dim: usize) -> usize {
    if dim == 2 {
        1
    } else {
        3
    }
}

/// Microscopic scales `ε₁ = ε`, `εᵢ = εᵢ₋₁ / rᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSchedule<T> {
    base: T,
    ratios: Vec<u32>,
    require_integer_inverse: bool,
}

impl<T: Real> ScaleSchedule<T> {
    pub fn new(base: T, ratios: Vec<u32>, require_integer_inverse: bool) -> Result<Self> {
        if !(base > T::zero() && base < T::one()) {
            return Err(Error::InvalidSchedule(format!("base scale must lie in (0, 1), got {base}")));
        }
        if let Some(r) = ratios.iter().find(|&&r| r < 2) {
            return Err(Error::InvalidSchedule(format!("scale ratios must be at least 2, got {r}")));
        }
        let s = Self { base, ratios, require_integer_inverse };
        if require_integer_inverse && !s.inverse_is_integer() {
            return Err(Error::InvalidSchedule(format!("1/ε must be an integer, got 1/{base}")));
        }
        Ok(s)
    }

    /// Single-scale schedule with `1/ε` required to be an integer.
    pub fn single(base: T) -> Result<Self> {
        Self::new(base, Vec::new(), true)
    }

    pub fn levels(&self) -> usize {
        self.ratios.len() + 1
    }

    pub fn base(&self) -> T {
        self.base
    }

    pub fn ratios(&self) -> &[u32] {
        &self.ratios
    }

    /// `εᵢ` for `i = 1..=levels`.
    pub fn scale(&self, i: usize) -> T {
        assert!(i >= 1 && i <= self.levels(), "scale index {i} out of range");
        let prod: u64 = self.ratios[..i - 1].iter().map(|&r| r as u64).product();
        self.base / T::lit(prod as f64)
    }

    pub fn scales(&self) -> Vec<T> {
        (1..=self.levels()).map(|i| self.scale(i)).collect()
    }

    pub fn finest(&self) -> T {
        self.scale(self.levels())
    }

    pub fn inverse_is_integer(&self) -> bool {
        let inv = T::one() / self.base;
        (inv - inv.round()).abs() <= T::lit(1e-9) * inv
    }

    /// `[x/ε₁ mod 1, …, x/εₙ mod 1]`.
    pub fn fast_points(&self, dim: usize, x: &Vec3<T>) -> Vec<Vec3<T>> {
        (1..=self.levels())
            .map(|i| {
                let eps = self.scale(i);
                let mut y = [T::zero(); 3];
                for k in 0..dim {
                    y[k] = (x[k] / eps).frac();
                }
                y
            })
            .collect()
    }
}

/// Sampled eigenvalue range `(alpha_hat, beta_hat)` of both fields.
///
/// Only the variable components a field depends on are sampled; `x` ranges
/// over the unit box. Logs a warning when the sampled range leaves the
/// declared bounds.
pub fn validate_bounds<T: Real>(spec: &CoefficientSpec<T>, samples_per_axis: usize) -> (T, T) {
    let s = samples_per_axis.max(2);
    let dim = spec.dim();
    let levels = spec.levels();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for which in [Which::A, Which::B] {
        let field = spec.field(which);
        let dep = field.dependence(dim, levels);
        // (variable, axis, count) for each sampled axis; variable 0 is x
        let mut axes: Vec<(usize, usize, usize)> = Vec::new();
        for k in 0..dim {
            if dep.x[k] {
                axes.push((0, k, s));
            }
        }
        for (l, mask) in dep.y.iter().enumerate() {
            for k in 0..dim {
                if mask[k] {
                    axes.push((l + 1, k, s));
                }
            }
        }
        let mut counter = vec![0usize; axes.len()];
        loop {
            let mut x = [T::lit(0.5); 3];
            let mut ys = vec![[T::zero(); 3]; levels];
            for (&(var, k, n), &c) in axes.iter().zip(&counter) {
                if var == 0 {
                    x[k] = T::from_usize_exact(c) / T::from_usize_exact(n - 1);
                } else {
                    ys[var - 1][k] = T::from_usize_exact(c) / T::from_usize_exact(n);
                }
            }
            let (l, h) = field.eval_raw(dim, &x, &ys).min_max_eigenvalue();
            lo = lo.min(l);
            hi = hi.max(h);
            // odometer
            let mut i = 0;
            while i < axes.len() {
                counter[i] += 1;
                if counter[i] < axes[i].2 {
                    break;
                }
                counter[i] = 0;
                i += 1;
            }
            if i == axes.len() {
                break;
            }
        }
    }
    if lo < spec.alpha() || hi > spec.beta() {
        log::warn!(
            "sampled eigenvalue range [{lo}, {hi}] leaves the declared bounds [{}, {}]",
            spec.alpha(),
            spec.beta()
        );
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layered_b(mean: f64, amp: f64) -> CoefficientField<f64> {
        CoefficientField::new(Family::Layered { layer: Layer::new(1, 0, mean, amp), matrix: SymMat::identity(2) })
    }

    #[test]
    fn constant_identity_everywhere() {
        let spec = CoefficientSpec::constant(2, 1, 1.0, 1.0).unwrap();
        let m = spec.eval(Which::B, &[0.3, 0.7, 0.0], &[[0.1, 0.9, 0.0]]).unwrap();
        assert_eq!(m, SymMat::identity(2));
        let a = spec.eval(Which::A, &[0.3, 0.7, 0.0], &[[0.1, 0.9, 0.0]]).unwrap();
        assert_eq!(a.dim(), 1);
    }

    #[test]
    fn layered_profile_at_quarter() {
        let spec = CoefficientSpec::new(
            2,
            1,
            CoefficientField::constant(SymMat::scalar(1, 2.0)),
            layered_b(2.0, 1.0),
            1.0,
            3.0,
        )
        .unwrap();
        let m = spec.eval(Which::B, &[0.0; 3], &[[0.25, 0.0, 0.0]]).unwrap();
        assert_eq!(m, SymMat::scalar(2, 3.0));
    }

    #[test]
    fn bounds_violation_is_reported() {
        let spec = CoefficientSpec::new(
            2,
            1,
            CoefficientField::constant(SymMat::scalar(1, 1.0)),
            layered_b(1.0, 0.5),
            1.0,
            2.0,
        )
        .unwrap();
        let err = spec.eval(Which::B, &[0.0; 3], &[[0.75, 0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::BoundsViolation { which: "b", .. }), "{err}");
    }

    #[test]
    fn eval_fine_uses_modular_fast_points() {
        let spec = CoefficientSpec::new(
            2,
            1,
            CoefficientField::constant(SymMat::scalar(1, 2.0)),
            layered_b(2.0, 1.0),
            1.0,
            3.0,
        )
        .unwrap();
        let sched = ScaleSchedule::single(0.25).unwrap();
        let fine = spec.eval_fine(Which::B, &sched, &[0.125, 0.0, 0.0]).unwrap();
        let direct = spec.eval(Which::B, &[0.125, 0.0, 0.0], &[[0.5, 0.0, 0.0]]).unwrap();
        assert_eq!(fine, direct);

        let two = ScaleSchedule::new(0.25, vec![4], true).unwrap();
        let ys = two.fast_points(2, &[3.0 / 16.0, 0.0, 0.0]);
        assert_eq!(ys[0][0], 0.75);
        assert_eq!(ys[1][0], 0.0);
    }

    #[test]
    fn schedule_validation() {
        assert!(ScaleSchedule::new(1.5_f64, vec![], false).is_err());
        assert!(ScaleSchedule::new(0.25_f64, vec![1], false).is_err());
        assert!(ScaleSchedule::new(0.3_f64, vec![], true).is_err());
        let s = ScaleSchedule::new(0.125_f64, vec![4, 2], true).unwrap();
        assert_eq!(s.scales(), vec![0.125, 0.03125, 0.015625]);
    }

    #[test]
    fn validate_bounds_constant_and_layered() {
        let spec = CoefficientSpec::constant(2, 1, 1.0, 1.0).unwrap();
        assert_eq!(validate_bounds(&spec, 4), (1.0, 1.0));

        let spec = CoefficientSpec::new(
            2,
            1,
            CoefficientField::constant(SymMat::scalar(1, 2.0)),
            layered_b(2.0, 1.0),
            1.0,
            3.0,
        )
        .unwrap();
        let (lo, hi) = validate_bounds(&spec, 400);
        // dense scan of 2 + sin(2πy) on y = j/400 hits both extremes exactly
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12, "{lo} {hi}");
    }

    #[test]
    fn expression_with_negative_region() {
        let expr = Expression::parse("1 + 2 * math::sin(2 * pi * y1_1)", SymMat::identity(2), 2, 1).unwrap();
        assert!(expr.dependence.y[0][0] && !expr.dependence.y[0][1] && !expr.dependence.depends_on_x());
        let spec = CoefficientSpec::new(
            2,
            1,
            CoefficientField::constant(SymMat::scalar(1, 1.0)),
            CoefficientField::new(Family::Expression(expr)),
            0.5,
            3.0,
        )
        .unwrap();
        let (lo, _) = validate_bounds(&spec, 16);
        assert!(lo <= 0.0);
    }

    #[test]
    fn expression_rejects_unknown_variables() {
        assert!(Expression::<f64>::parse("z + 1", SymMat::identity(2), 2, 1).is_err());
        assert!(Expression::<f64>::parse("y2_1", SymMat::identity(2), 2, 1).is_err());
    }

    #[test]
    fn spec_rejects_mismatched_matrix() {
        let err = CoefficientSpec::new(
            2,
            1,
            CoefficientField::constant(SymMat::identity(2)),
            CoefficientField::constant(SymMat::identity(2)),
            1.0,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }
}
