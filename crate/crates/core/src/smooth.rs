//! Savitzky-Golay smoothing.
//!
//! Each point is replaced by the value at that point of a degree-`d`
//! least-squares polynomial fitted over a window of `2w + 1` neighbours. On
//! the interior this is a fixed convolution; the first and last `w` points
//! evaluate the polynomial of the nearest full window at their own offset,
//! so polynomials of degree ≤ `d` pass through unchanged everywhere.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SGConfig {
    /// `w`: the window spans `2w + 1` points.
    pub half_window: usize,
    pub degree: usize,
}

impl SGConfig {
    pub fn new(half_window: usize, degree: usize) -> Result<Self> {
        let cfg = Self { half_window, degree };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn window(&self) -> usize {
        2 * self.half_window + 1
    }

    fn validate(&self) -> Result<()> {
        if self.half_window == 0 {
            return Err(Error::InvalidConfig("half window must be positive".into()));
        }
        if self.degree > 2 * self.half_window {
            return Err(Error::InvalidConfig(format!(
                "degree {} exceeds 2w = {}",
                self.degree,
                2 * self.half_window
            )));
        }
        Ok(())
    }
}

/// Convolution weights `C_{−w} ..= C_{w}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SGWeights {
    pub coefficients: Vec<f64>,
}

/// Hat matrix `H = A (AᵀA)⁻¹ Aᵀ` of the window's Vandermonde system.
/// Row `m` maps a window of samples to the fitted value at window position `m`.
fn projection(cfg: &SGConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let w = cfg.half_window as f64;
    let size = cfg.window();
    // Offsets scaled to [−1, 1] keep AᵀA well conditioned for wide windows.
    let a = DMatrix::from_fn(size, cfg.degree + 1, |r, c| {
        let u = (r as f64 - w) / w;
        u.powi(c as i32)
    });
    let normal = a.tr_mul(&a);
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::InvalidConfig("singular Savitzky-Golay system".into()))?;
    let solved = chol.solve(&a.transpose());
    Ok(&a * solved)
}

pub fn sg_coefficients(cfg: &SGConfig) -> Result<SGWeights> {
    let h = projection(cfg)?;
    let center = cfg.half_window;
    Ok(SGWeights {
        coefficients: h.row(center).iter().copied().collect(),
    })
}

pub fn savitzky_golay(y: &[f64], cfg: &SGConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let size = cfg.window();
    let n = y.len();
    if n < size {
        return Err(Error::TooShort { len: n, window: size });
    }
    let h = projection(cfg)?;
    let w = cfg.half_window;
    let apply = |row: usize, start: usize| -> f64 {
        (0..size).map(|k| h[(row, k)] * y[start + k]).sum()
    };

    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let v = if j < w {
            apply(j, 0)
        } else if j + w >= n {
            apply(j + size - n, n - size)
        } else {
            apply(w, j - w)
        };
        out.push(v);
    }
    Ok(out)
}

/// `true` when `x` is evenly spaced to within a relative `1e-6`.
pub fn is_uniform_grid(x: &[f64]) -> bool {
    if x.len() < 3 {
        return true;
    }
    let step = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let tol = 1e-6 * step.abs().max(f64::MIN_POSITIVE);
    x.windows(2).all(|p| ((p[1] - p[0]) - step).abs() <= tol)
}
