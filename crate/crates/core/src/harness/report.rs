//! Convergence reports and the log-log slope fit.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Least-squares slope of `ln e` against `ln ε`.
pub fn fit_slope<T: Real>(pairs: &[(T, T)]) -> Result<T> {
    if pairs.len() < 2 {
        return Err(Error::InvalidData(format!("slope fit needs at least 2 pairs, got {}", pairs.len())));
    }
    if let Some((e, v)) = pairs.iter().find(|(e, v)| !(*e > T::zero()) || !(*v > T::zero())) {
        return Err(Error::InvalidData(format!("slope fit needs positive values, got ({e}, {v})")));
    }
    let n = T::from_usize_exact(pairs.len());
    let lx: Vec<T> = pairs.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<T> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (x, y) in lx.iter().zip(&ly) {
        sxy += (*x - mx) * (*y - my);
        sxx += (*x - mx) * (*x - mx);
    }
    if !(sxx > T::zero()) {
        return Err(Error::InvalidData("slope fit needs at least two distinct ε".into()));
    }
    Ok(sxy / sxx)
}

/// Outcome of one ε of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub eps: f64,
    pub e_vel: f64,
    pub e_curl: f64,
    pub e_total: f64,
    pub runtime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Completed runs in configuration order.
    pub entries: Vec<ReportEntry>,
    /// `(ε, message)` of runs that failed.
    pub failures: Vec<(f64, String)>,
    /// Fitted from the completed runs; `None` with fewer than two.
    pub slope: Option<f64>,
    pub fingerprint: String,
}

impl ConvergenceReport {
    pub fn new(entries: Vec<ReportEntry>, failures: Vec<(f64, String)>, fingerprint: String) -> Self {
        let pairs: Vec<(f64, f64)> = entries.iter().map(|e| (e.eps, e.e_total)).collect();
        let slope = fit_slope(&pairs).ok();
        Self { entries, failures, slope, fingerprint }
    }

    pub fn partial(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Errors strictly decrease as ε decreases.
    pub fn strictly_decreasing(&self) -> bool {
        let mut e: Vec<&ReportEntry> = self.entries.iter().collect();
        e.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        e.windows(2).all(|w| w[1].e_total < w[0].e_total)
    }

    /// `eps,E_vel,E_curl,E_total,slope`; the slope repeats on every row.
    /// Runtimes are left out so reruns are byte-identical.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "eps,E_vel,E_curl,E_total,slope")?;
        let slope = match self.slope {
            Some(s) => format!("{s:.16e}"),
            None => "nan".into(),
        };
        for e in &self.entries {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{slope}", e.eps, e.e_vel, e.e_curl, e.e_total)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let c = 0.37;
        let half: Vec<(f64, f64)> = [0.25, 0.125, 0.0625, 0.03125].iter().map(|&e: &f64| (e, c * e.sqrt())).collect();
        assert!((fit_slope(&half).unwrap() - 0.5).abs() < 1e-12);
        assert!((fit_slope(&[(0.125f64, 2e-2f64), (0.0625, 1e-2)]).unwrap() - 1.0).abs() < 1e-12);
        let s = 1.0;
        let p: Vec<(f64, f64)> = [0.1, 0.05, 0.02].iter().map(|&e: &f64| (e, 3.0 * e.powf(s / (1.0 + s)))).collect();
        assert!((fit_slope(&p).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_slope(&[(0.1, 1.0)]).is_err());
        assert!(fit_slope(&[(0.1, 1.0), (0.05, 0.0)]).is_err());
        assert!(fit_slope(&[(-0.1, 1.0), (0.05, 0.5)]).is_err());
        assert!(fit_slope(&[(0.1, 1.0), (0.1, 0.5)]).is_err());
    }

    #[test]
    fn partial_report_fits_completed_runs() {
        let entries = vec![
            ReportEntry { eps: 0.5, e_vel: 1.0, e_curl: 1.0, e_total: 2.0, runtime: 1.0 },
            ReportEntry { eps: 0.25, e_vel: 0.5, e_curl: 0.5, e_total: 1.0, runtime: 1.0 },
        ];
        let r = ConvergenceReport::new(entries, vec![(0.125, "boom".into())], "x".into());
        assert!(r.partial());
        assert!((r.slope.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.strictly_decreasing());
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("5.0000000000000000e-1,"));
    }
}
