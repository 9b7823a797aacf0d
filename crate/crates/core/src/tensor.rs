//! Small symmetric matrices (1×1, 2×2, 3×3) with closed-form eigenvalues.

use crate::scalar::{Real, Vec3};

/// Symmetric `dim × dim` matrix, `dim ∈ {1, 2, 3}`. Entries outside the
/// leading block are kept at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat<T> {
    dim: usize,
    m: [[T; 3]; 3],
}

impl<T: Real> SymMat<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "matrix dimension must be 1, 2 or 3");
        Self { dim, m: [[T::zero(); 3]; 3] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, T::one())
    }

    pub fn scalar(dim: usize, s: T) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.m[i][i] = s;
        }
        out
    }

    pub fn diag(values: &[T]) -> Self {
        let mut out = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            out.m[i][i] = v;
        }
        out
    }

    /// Builds from rows; the upper triangle wins, so the result is exactly
    /// symmetric. Returns `None` when the input is not square or the two
    /// triangles differ by more than `1e-12` relative.
    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let dim = rows.len();
        if !(1..=3).contains(&dim) || rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        let mut out = Self::zeros(dim);
        let mut scale = T::zero();
        for r in rows {
            for &v in r {
                scale = scale.max(v.abs());
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let diff = (rows[i][j] - rows[j][i]).abs();
                if diff > T::lit(1e-12) * scale.max(T::one()) {
                    return None;
                }
                out.m[i][j] = rows[i][j];
                out.m[j][i] = rows[i][j];
            }
        }
        Some(out)
    }

    /// Symmetric part `(A + Aᵀ)/2` of a full matrix.
    pub fn symmetric_part(dim: usize, full: &[[T; 3]; 3]) -> Self {
        let mut out = Self::zeros(dim);
        let half = T::lit(0.5);
        for i in 0..dim {
            for j in 0..dim {
                out.m[i][j] = half * (full[i][j] + full[j][i]);
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[i][j]
    }

    /// Sets entry `(i, j)` and its mirror.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    pub fn entries(&self) -> &[[T; 3]; 3] {
        &self.m
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] += other.m[i][j];
            }
        }
        out
    }

    /// `Σ wᵢ Mᵢ`; used for multilinear interpolation.
    pub fn weighted_sum<'a>(dim: usize, terms: impl IntoIterator<Item = (T, &'a Self)>) -> Self
    where
        T: 'a,
    {
        let mut out = Self::zeros(dim);
        for (w, mat) in terms {
            for i in 0..3 {
                for j in 0..3 {
                    out.m[i][j] += w * mat.m[i][j];
                }
            }
        }
        out
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        let mut out = [T::zero(); 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += self.m[i][j] * v[j];
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut d = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }

    /// `max |A - Aᵀ|`.
    pub fn asymmetry(&self) -> T {
        let mut d = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - self.m[j][i]).abs());
            }
        }
        d
    }

    pub fn max_abs(&self) -> T {
        self.m.iter().flatten().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Eigenvalues in ascending order (only the first `dim` are meaningful).
    pub fn eigenvalues(&self) -> Vec<T> {
        let m = &self.m;
        match self.dim {
            1 => vec![m[0][0]],
            2 => {
                let half = T::lit(0.5);
                let mean = half * (m[0][0] + m[1][1]);
                let dev = half * (m[0][0] - m[1][1]);
                let r = (dev * dev + m[0][1] * m[0][1]).sqrt();
                vec![mean - r, mean + r]
            }
            _ => sym3_eigenvalues(m),
        }
    }

    pub fn min_max_eigenvalue(&self) -> (T, T) {
        let ev = self.eigenvalues();
        (ev[0], ev[ev.len() - 1])
    }
}

fn sym3_eigenvalues<T: Real>(m: &[[T; 3]; 3]) -> Vec<T> {
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / three;
    let mut ev = if p1 <= T::epsilon() * (m[0][0].abs() + m[1][1].abs() + m[2][2].abs()).powi(2) {
        vec![m[0][0], m[1][1], m[2][2]]
    } else {
        let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + two * p1;
        let p = (p2 / T::lit(6.0)).sqrt();
        let mut b = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let shift = if i == j { q } else { T::zero() };
                b[i][j] = (m[i][j] - shift) / p;
            }
        }
        let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
            - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
        let r = (det_b / two).max(-T::one()).min(T::one());
        let phi = r.acos() / three;
        let e1 = q + two * p * phi.cos();
        let e3 = q + two * p * (phi + two * T::PI() / three).cos();
        let e2 = three * q - e1 - e3;
        vec![e1, e2, e3]
    };
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}
