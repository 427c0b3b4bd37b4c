//! Goodness-of-fit metrics and residual diagnostics.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// `None` when `y` has zero variance and R² is undefined.
    pub r_squared: Option<f64>,
    pub mse: f64,
    pub rmse: f64,
    pub n: usize,
}

impl Metrics {
    /// `1 − (1 − R²)(n − 1)/(n − p − 1)` for `p` predictors beyond the intercept.
    pub fn adjusted_r_squared(&self, p: usize) -> Option<f64> {
        let r2 = self.r_squared?;
        let n = self.n as f64;
        let dof = n - p as f64 - 1.0;
        (dof > 0.0).then(|| 1.0 - (1.0 - r2) * (n - 1.0) / dof)
    }
}

fn check(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::ShapeMismatch(format!(
            "y has {} entries, predictions {}",
            y.len(),
            y_hat.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InsufficientData("need at least two observations".into()));
    }
    Ok(())
}

pub fn residuals(y: &[f64], y_hat: &[f64]) -> Vec<f64> {
    y.iter().zip(y_hat).map(|(a, b)| a - b).collect()
}

/// R², MSE and RMSE of predictions `y_hat` against observations `y`.
pub fn model_analysis(y: &[f64], y_hat: &[f64]) -> Result<Metrics> {
    check(y, y_hat)?;
    let n = y.len() as f64;
    let rss: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let mean = y.iter().sum::<f64>() / n;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let mse = rss / n;
    Ok(Metrics {
        r_squared: (tss > 0.0).then(|| 1.0 - rss / tss),
        mse,
        rmse: mse.sqrt(),
        n: y.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqPoint {
    /// Standard-normal quantile at position `(i − 0.5)/n`.
    pub theoretical: f64,
    /// `i`-th smallest residual.
    pub sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub qq: Vec<QqPoint>,
}

pub fn residual_diagnostics(y: &[f64], y_hat: &[f64]) -> Result<Diagnostics> {
    check(y, y_hat)?;
    let r = residuals(y, y_hat);
    Ok(Diagnostics {
        fitted: y_hat.to_vec(),
        qq: qq_points(&r),
        residuals: r,
    })
}

/// Sorted sample against normal quantiles at `(i − 0.5)/n`.
pub fn qq_points(sample: &[f64]) -> Vec<QqPoint> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, s)| QqPoint {
            theoretical: normal_quantile((i as f64 + 0.5) / n),
            sample: s,
        })
        .collect()
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation followed by one Halley step on
/// `Φ(x) − p`, which brings the error to near machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    let e = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}
