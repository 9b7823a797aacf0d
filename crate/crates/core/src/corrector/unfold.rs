//! Multiscale unfolding `𝒯` and folding `𝒰` for box domains.
//!
//! With scales `ε₁ > … > εₙ` and integer ratios,
//!
//! ```text
//! 𝒯(φ)(x, y₁..yₙ) = φ(ε₁[x/ε₁] + ε₂[y₁ ε₁/ε₂] + … + εₙ[yₙ₋₁ εₙ₋₁/εₙ] + εₙ yₙ)
//! 𝒰(Φ)(x) = ∫ Φ(ε₁[x/ε₁] + ε₁t₁, (ε₂/ε₁)([(ε₁/ε₂){x/ε₁}] + t₂), …, {x/εₙ}) dt
//! ```
//!
//! where `[·]` and `{·}` are the componentwise integer and fractional parts.

use rayon::prelude::*;

use crate::coeffs::ScaleSchedule;
use crate::error::{Error, Result};
use crate::fem::quadrature::gauss_legendre;
use crate::scalar::{Real, Vec3};

/// Number of `ε₁`-cells along each axis of the box `[0, L]`; fails unless
/// every `Lₐ/ε₁` is an integer.
pub fn lattice_cells<T: Real>(schedule: &ScaleSchedule<T>, extents: &[T]) -> Result<[usize; 3]> {
    let eps = schedule.base();
    let mut cells = [1usize; 3];
    for (a, &l) in extents.iter().enumerate() {
        let q = l / eps;
        let r = q.round();
        if (q - r).abs() > T::lit(1e-9) * q.max(T::one()) || r < T::one() {
            return Err(Error::InvalidSchedule(format!(
                "extent {l} along axis {a} is not an integer multiple of eps1 = {eps}"
            )));
        }
        cells[a] = r.to_f64_lossy() as usize;
    }
    Ok(cells)
}

/// Point of `D` that `𝒯` reads for `(x, y₁..yₙ)`.
pub fn unfold_point<T: Real>(schedule: &ScaleSchedule<T>, dim: usize, x: &Vec3<T>, ys: &[Vec3<T>]) -> Vec3<T> {
    let n = schedule.levels();
    debug_assert_eq!(ys.len(), n);
    let e1 = schedule.base();
    let mut p = [T::zero(); 3];
    for a in 0..dim {
        let mut v = e1 * (x[a] / e1).floor();
        for i in 1..n {
            let r = T::lit(schedule.ratios()[i - 1] as f64);
            v += schedule.scale(i + 1) * (ys[i - 1][a] * r).floor();
        }
        v += schedule.finest() * ys[n - 1][a];
        p[a] = v;
    }
    p
}

/// Arguments `(x-slot, y-slots)` at which `𝒰` samples `Φ` for the
/// integration point `t = (t₁..tₙ)`.
pub fn fold_slots<T: Real>(
    schedule: &ScaleSchedule<T>,
    dim: usize,
    x: &Vec3<T>,
    ts: &[Vec3<T>],
) -> (Vec3<T>, Vec<Vec3<T>>) {
    let n = schedule.levels();
    debug_assert_eq!(ts.len(), n);
    let e1 = schedule.base();
    let mut xs = [T::zero(); 3];
    let mut ys = vec![[T::zero(); 3]; n];
    for a in 0..dim {
        xs[a] = e1 * ((x[a] / e1).floor() + ts[0][a]);
        for i in 1..n {
            let r = T::lit(schedule.ratios()[i - 1] as f64);
            let f = (x[a] / schedule.scale(i)).frac();
            ys[i - 1][a] = ((r * f).floor() + ts[i][a]) / r;
        }
        ys[n - 1][a] = (x[a] / schedule.finest()).frac();
    }
    (xs, ys)
}

/// Gauss product points and weights on `[0,1]^dim`.
pub(crate) fn product_rule<T: Real>(dim: usize, qpts: usize) -> Vec<(Vec3<T>, T)> {
    let (p, w) = gauss_legendre::<T>(qpts);
    let m = p.len();
    let total = m.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut pt = [T::zero(); 3];
            let mut wt = T::one();
            for c in pt.iter_mut().take(dim) {
                *c = p[idx % m];
                wt *= w[idx % m];
                idx /= m;
            }
            (pt, wt)
        })
        .collect()
}

/// `𝒰(Φ)(x)` for a closed-form `Φ(x, y₁..yₙ)`, with a `qpts`-point Gauss
/// product rule in each `tᵢ`.
pub fn fold<T: Real>(
    phi: &(dyn Fn(&Vec3<T>, &[Vec3<T>]) -> T + Sync),
    schedule: &ScaleSchedule<T>,
    dim: usize,
    x: &Vec3<T>,
    qpts: usize,
) -> T {
    let n = schedule.levels();
    let rule = product_rule::<T>(dim, qpts);
    let m = rule.len();
    let mut acc = T::zero();
    let mut ts = vec![[T::zero(); 3]; n];
    for idx in 0..m.pow(n as u32) {
        let mut r = idx;
        let mut w = T::one();
        for t in ts.iter_mut() {
            let (p, wt) = rule[r % m];
            *t = p;
            w *= wt;
            r /= m;
        }
        let (xs, ys) = fold_slots(schedule, dim, x, &ts);
        acc += w * phi(&xs, &ys);
    }
    acc
}

/// `𝒰(Φ)` at many points, after checking the lattice.
pub fn fold_at<T: Real>(
    phi: &(dyn Fn(&Vec3<T>, &[Vec3<T>]) -> T + Sync),
    schedule: &ScaleSchedule<T>,
    extents: &[T],
    points: &[Vec3<T>],
    qpts: usize,
) -> Result<Vec<T>> {
    lattice_cells(schedule, extents)?;
    let dim = extents.len();
    Ok(points.par_iter().map(|x| fold(phi, schedule, dim, x, qpts)).collect())
}

/// Composite Gauss rule on `[0,1]`: `intervals` equal pieces, `qpts` points each.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule<T> {
    pub intervals: usize,
    pub qpts: usize,
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> CompositeRule<T> {
    pub fn new(intervals: usize, qpts: usize) -> Self {
        let (p, w) = gauss_legendre::<T>(qpts);
        let k = T::from_usize_exact(intervals);
        let mut points = Vec::with_capacity(intervals * p.len());
        let mut weights = Vec::with_capacity(intervals * p.len());
        for j in 0..intervals {
            for (pt, wt) in p.iter().zip(&w) {
                points.push((T::from_usize_exact(j) + *pt) / k);
                weights.push(*wt / k);
            }
        }
        Self { intervals, qpts: p.len(), points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Samples of a function on `D × Y₁ × … × Yₙ`: one block per `ε₁`-cell of
/// the box, each block on the product of the per-level composite rules.
///
/// Values depend on `x` only through its `ε₁`-cell, which is all `𝒯(φ)`
/// can see.
#[derive(Debug, Clone)]
pub struct UnfoldedField<T> {
    dim: usize,
    schedule: ScaleSchedule<T>,
    cells: [usize; 3],
    rules: Vec<CompositeRule<T>>,
    values: Vec<T>,
}

impl<T: Real> UnfoldedField<T> {
    /// Samples `Φ(x, y₁..yₙ)` with `x` at the centre of each `ε₁`-cell.
    pub fn sample(
        phi: &(dyn Fn(&Vec3<T>, &[Vec3<T>]) -> T + Sync),
        schedule: &ScaleSchedule<T>,
        extents: &[T],
        resolution: &[usize],
        qpts: usize,
    ) -> Result<Self> {
        let dim = extents.len();
        let n = schedule.levels();
        if resolution.len() != n {
            return Err(Error::DimensionMismatch(format!("{} resolutions for {n} levels", resolution.len())));
        }
        let cells = lattice_cells(schedule, extents)?;
        let rules: Vec<CompositeRule<T>> = resolution.iter().map(|&k| CompositeRule::new(k.max(1), qpts)).collect();
        let mut out = Self { dim, schedule: schedule.clone(), cells, rules, values: Vec::new() };
        let per = out.points_per_cell();
        let e1 = schedule.base();
        let half = T::lit(0.5);
        out.values = (0..out.cell_count() * per)
            .into_par_iter()
            .map(|idx| {
                let c = out.cell_ijk(idx / per);
                let mut x = [T::zero(); 3];
                for a in 0..dim {
                    x[a] = e1 * (T::from_usize_exact(c[a]) + half);
                }
                let (ys, _) = out.point(idx % per);
                phi(&x, &ys)
            })
            .collect();
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> usize {
        self.rules.len()
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells[..self.dim].iter().product()
    }

    pub fn points_per_cell(&self) -> usize {
        self.rules.iter().map(|r| r.len().pow(self.dim as u32)).product()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, cell: usize, p: usize) -> T {
        self.values[cell * self.points_per_cell() + p]
    }

    pub fn cell_ijk(&self, cell: usize) -> [usize; 3] {
        let mut ijk = [0; 3];
        let mut r = cell;
        for a in 0..self.dim {
            ijk[a] = r % self.cells[a];
            r /= self.cells[a];
        }
        ijk
    }

    /// Fast coordinates `y₁..yₙ` and product weight of point `p`.
    pub fn point(&self, p: usize) -> (Vec<Vec3<T>>, T) {
        let mut ys = vec![[T::zero(); 3]; self.levels()];
        let mut w = T::one();
        let mut r = p;
        for (y, rule) in ys.iter_mut().zip(&self.rules) {
            let m = rule.len();
            for c in y.iter_mut().take(self.dim) {
                *c = rule.points[r % m];
                w *= rule.weights[r % m];
                r /= m;
            }
        }
        (ys, w)
    }

    /// Point of `D` whose value `𝒯` places at `(cell, p)`.
    pub fn source_point(&self, cell: usize, p: usize) -> Vec3<T> {
        let c = self.cell_ijk(cell);
        let e1 = self.schedule.base();
        let mut x = [T::zero(); 3];
        for a in 0..self.dim {
            x[a] = e1 * (T::from_usize_exact(c[a]) + T::lit(0.5));
        }
        let (ys, _) = self.point(p);
        unfold_point(&self.schedule, self.dim, &x, &ys)
    }

    /// `∫_{D^{ε₁}} ∫_𝒀` of the samples.
    pub fn integral(&self) -> T {
        let per = self.points_per_cell();
        let weights: Vec<T> = (0..per).map(|p| self.point(p).1).collect();
        let vol = self.schedule.base().powi(self.dim as i32);
        let mut acc = T::zero();
        for c in 0..self.cell_count() {
            let mut s = T::zero();
            for (p, w) in weights.iter().enumerate() {
                s += *w * self.values[c * per + p];
            }
            acc += vol * s;
        }
        acc
    }

    /// `𝒰` of the samples at `x`, reading them as piecewise constant on the
    /// composite intervals. Needs each composite resolution below the finest
    /// level to be a multiple of the next scale ratio.
    pub fn fold(&self, x: &Vec3<T>) -> Result<T> {
        let n = self.levels();
        let dim = self.dim;
        let e1 = self.schedule.base();
        let mut cell = 0;
        let mut stride = 1;
        for a in 0..dim {
            let c = ((x[a] / e1).floor().to_f64_lossy().max(0.0) as usize).min(self.cells[a] - 1);
            cell += c * stride;
            stride *= self.cells[a];
        }
        // per level and axis: the rule points that take part, with weights
        let mut choices: Vec<Vec<Vec<(usize, T)>>> = Vec::with_capacity(n);
        for i in 1..=n {
            let rule = &self.rules[i - 1];
            let q = rule.qpts;
            let k = rule.intervals;
            let mut axes = Vec::with_capacity(dim);
            for a in 0..dim {
                let f = (x[a] / self.schedule.scale(i)).frac();
                let (lo, hi) = if i < n {
                    let r = self.schedule.ratios()[i - 1] as usize;
                    if k % r != 0 {
                        return Err(Error::InvalidSchedule(format!(
                            "level {i} composite resolution {k} is not a multiple of the ratio {r}"
                        )));
                    }
                    let s = ((f * T::from_usize_exact(r)).floor().to_f64_lossy() as usize).min(r - 1);
                    (s * k / r, (s + 1) * k / r)
                } else {
                    let j = ((f * T::from_usize_exact(k)).floor().to_f64_lossy() as usize).min(k - 1);
                    (j, j + 1)
                };
                let scale = T::from_usize_exact(k) / T::from_usize_exact(hi - lo);
                let mut pts = Vec::with_capacity((hi - lo) * q);
                for j in lo..hi {
                    for g in 0..q {
                        pts.push((j * q + g, rule.weights[j * q + g] * scale));
                    }
                }
                axes.push(pts);
            }
            choices.push(axes);
        }
        let per = self.points_per_cell();
        let flat: Vec<&Vec<(usize, T)>> = choices.iter().flatten().collect();
        let mut mults = Vec::with_capacity(flat.len());
        let mut m = 1;
        for i in 0..n {
            for _ in 0..dim {
                mults.push(m);
                m *= self.rules[i].len();
            }
        }
        let total: usize = flat.iter().map(|v| v.len()).product();
        let mut acc = T::zero();
        for mut idx in 0..total {
            let mut p = 0;
            let mut w = T::one();
            for (axis, opts) in flat.iter().enumerate() {
                let (j, wt) = opts[idx % opts.len()];
                idx /= opts.len();
                p += j * mults[axis];
                w *= wt;
            }
            acc += w * self.values[cell * per + p];
        }
        Ok(acc)
    }
}

/// `𝒯(φ)` on the product grid; `φ` is taken as zero outside the box.
pub fn unfold<T: Real>(
    phi: &(dyn Fn(&Vec3<T>) -> T + Sync),
    schedule: &ScaleSchedule<T>,
    extents: &[T],
    resolution: &[usize],
    qpts: usize,
) -> Result<UnfoldedField<T>> {
    let dim = extents.len();
    let ext = extents.to_vec();
    let sched = schedule.clone();
    let composed = move |x: &Vec3<T>, ys: &[Vec3<T>]| -> T {
        let p = unfold_point(&sched, dim, x, ys);
        if (0..dim).all(|a| p[a] >= T::zero() && p[a] <= ext[a]) {
            phi(&p)
        } else {
            T::zero()
        }
    };
    UnfoldedField::sample(&composed, schedule, extents, resolution, qpts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(base: f64, ratios: Vec<u32>) -> ScaleSchedule<f64> {
        ScaleSchedule::new(base, ratios, true).unwrap()
    }

    #[test]
    fn constant_field_unfolds_to_constant() {
        let s = sched(0.25, vec![]);
        let u = unfold(&|_| 1.0, &s, &[1.0, 1.0], &[1], 2).unwrap();
        assert!(u.values().iter().all(|&v| v == 1.0));
        assert!((u.integral() - 1.0).abs() < 1e-15);
        assert_eq!(u.cell_count(), 16);
    }

    #[test]
    fn non_integer_lattice_is_rejected() {
        let s = sched(0.25, vec![]);
        let err = unfold(&|_| 1.0, &s, &[1.1, 1.0], &[1], 2).unwrap_err();
        assert!(matches!(err, Error::InvalidSchedule(_)));
        assert!(fold_at(&|_, _| 1.0, &s, &[0.9, 1.0], &[[0.1, 0.1, 0.0]], 2).is_err());
    }

    #[test]
    fn fold_slots_stay_in_cells() {
        let s = sched(0.25, vec![4]);
        let x = [0.3, 0.61, 0.0];
        let (xs, ys) = fold_slots(&s, 2, &x, &[[0.5, 0.5, 0.0], [0.0, 0.99, 0.0]]);
        assert!((xs[0] - 0.375).abs() < 1e-15);
        assert!((xs[1] - 0.625).abs() < 1e-15);
        // {0.3/0.25} = 0.2 → sub-cell 0 of 4; {0.61/0.25} = 0.44 → sub-cell 1
        assert!((ys[0][0] - 0.0).abs() < 1e-15);
        assert!((ys[0][1] - (1.0 + 0.99) / 4.0).abs() < 1e-15);
        assert!((ys[1][0] - (0.3f64 / 0.0625).fract()).abs() < 1e-12);
    }

    #[test]
    fn fold_of_y_independent_field_is_cell_average() {
        let s = sched(0.25, vec![]);
        // affine in x: the 2-point rule is exact
        let v = fold(&|x, _| 1.0 + 2.0 * x[0], &s, 2, &[0.3, 0.9, 0.0], 2);
        assert!((v - (1.0 + 2.0 * 0.375)).abs() < 1e-14);
        let c = fold(&|_, _| 3.5, &s, 2, &[0.7, 0.2, 0.0], 2);
        assert!((c - 3.5).abs() < 1e-15);
    }
}
