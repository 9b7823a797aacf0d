//! Gauss–Legendre rules on `[0, 1]` and their tensor products.

use crate::scalar::{Real, Vec3};

/// Points and weights of the `n`-point rule on `[0, 1]`, `1 ≤ n ≤ 4`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let (pts, wts): (&[f64], &[f64]) = match n {
        1 => (&[0.0], &[2.0]),
        2 => (&[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8], &[1.0, 1.0]),
        3 => (
            &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
            &[0.555_555_555_555_555_6, 0.888_888_888_888_888_9, 0.555_555_555_555_555_6],
        ),
        4 => (
            &[-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6],
            &[0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9],
        ),
        _ => panic!("Gauss–Legendre rule with {n} points is not tabulated"),
    };
    let half = T::lit(0.5);
    (
        pts.iter().map(|&p| half * (T::lit(p) + T::one())).collect(),
        wts.iter().map(|&w| half * T::lit(w)).collect(),
    )
}

/// Tensor-product rule on `[0,1]^dim`: reference points and weights summing to 1.
#[derive(Debug, Clone)]
pub struct TensorRule<T> {
    pub points: Vec<Vec3<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> TensorRule<T> {
    pub fn new(dim: usize, n: usize) -> Self {
        let (p, w) = gauss_legendre::<T>(n);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let count = n.pow(dim as u32);
        for q in 0..count {
            let mut pt = [T::zero(); 3];
            let mut wt = T::one();
            let mut r = q;
            for v in pt.iter_mut().take(dim) {
                *v = p[r % n];
                wt *= w[r % n];
                r /= n;
            }
            points.push(pt);
            weights.push(wt);
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in 1..=4 {
            let (_, w) = gauss_legendre::<f64>(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        let r = TensorRule::<f64>::new(3, 3);
        assert_eq!(r.len(), 27);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_polynomials() {
        // n points integrate degree 2n-1 exactly on [0,1]
        for n in 1..=4usize {
            let (p, w) = gauss_legendre::<f64>(n);
            for deg in 0..2 * n {
                let q: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
        // x²y³ on the square with the 2-point product rule
        let r = TensorRule::<f64>::new(2, 2);
        let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x[0] * x[0] * x[1].powi(3)).sum();
        assert!((q - 1.0 / 12.0).abs() < 1e-14);
    }
}
