use serde::Serialize;

use crate::error::{Error, Result};

/// Fit of `1/tau_tot = 1/tau0 + P_D / tau_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QndFit {
    pub tau0: f64,
    pub p_d: f64,
    /// Standard errors from the residual variance; `None` with two points.
    pub tau0_stderr: Option<f64>,
    pub p_d_stderr: Option<f64>,
}

/// Ordinary least squares of `1/lifetime` against `1/interval`.
pub fn fit_qnd(intervals: &[f64], lifetimes: &[f64]) -> Result<QndFit> {
    if intervals.len() != lifetimes.len() {
        return Err(Error::LengthMismatch {
            what: "intervals vs lifetimes",
            left: intervals.len(),
            right: lifetimes.len(),
        });
    }
    if intervals
        .iter()
        .chain(lifetimes)
        .any(|&v| !(v > 0.0 && v.is_finite()))
    {
        return Err(Error::invalid("qnd data", "times must be positive"));
    }
    let n = intervals.len();
    let x: Vec<f64> = intervals.iter().map(|t| 1.0 / t).collect();
    let y: Vec<f64> = lifetimes.iter().map(|t| 1.0 / t).collect();
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    if n < 2 || sxx <= f64::EPSILON * xm * xm * n as f64 {
        return Err(Error::DegenerateDesign(
            "need at least two distinct intervals".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;

    let (tau0_stderr, p_d_stderr) = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        let s2 = rss / (n - 2) as f64;
        let se_slope = (s2 / sxx).sqrt();
        let se_icpt = (s2 * (1.0 / n as f64 + xm * xm / sxx)).sqrt();
        (Some(se_icpt / (intercept * intercept)), Some(se_slope))
    } else {
        (None, None)
    };
    Ok(QndFit {
        tau0: 1.0 / intercept,
        p_d: slope,
        tau0_stderr,
        p_d_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_data() {
        let (tau0, pd) = (1.01e-3, 2e-4);
        let iv = [2e-6, 5e-6, 10e-6, 20e-6, 50e-6, 100e-6];
        let lt: Vec<f64> = iv.iter().map(|t| 1.0 / (1.0 / tau0 + pd / t)).collect();
        let fit = fit_qnd(&iv, &lt).unwrap();
        assert!((fit.tau0 / tau0 - 1.0).abs() < 1e-12);
        assert!((fit.p_d / pd - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_design() {
        assert!(matches!(
            fit_qnd(&[1e-5, 1e-5], &[1e-3, 1e-3]),
            Err(Error::DegenerateDesign(_))
        ));
        assert!(fit_qnd(&[1e-5], &[1e-3]).is_err());
        assert!(fit_qnd(&[1e-5, 2e-5], &[1e-3]).is_err());
    }
}
