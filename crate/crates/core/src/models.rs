//! Parametric model families `f(x; θ)` with evaluation, Jacobians and
//! data-driven starting points.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::lstsq;

/// Parameter vector θ. Every entry is finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter value {v}")));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// The builtin families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `a·x + b`
    Linear,
    /// `a·x² + b·x + c`
    Quadratic,
    /// `a·x³ + b·x² + c·x + d`
    Cubic,
    /// `a·sin(x) + b·cos(x)`
    Sinusoidal,
    /// `a·ln(x) + b`, x > 0
    Logarithmic,
    /// `a·exp(b·x)`
    Exponential,
    /// `a·exp(−(x − m)² / (2s²))`, parameters `(a, m, s)`; only `|s|` matters
    Gaussian,
    /// `a·x^b`, x > 0
    Power,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Linear,
        Family::Quadratic,
        Family::Cubic,
        Family::Sinusoidal,
        Family::Logarithmic,
        Family::Exponential,
        Family::Gaussian,
        Family::Power,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Quadratic => "quadratic",
            Family::Cubic => "cubic",
            Family::Sinusoidal => "sinusoidal",
            Family::Logarithmic => "logarithmic",
            Family::Exponential => "exponential",
            Family::Gaussian => "gaussian",
            Family::Power => "power",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnknownModel {
                name: name.to_string(),
                valid: Self::valid_names(),
            })
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Family::name).join(", ")
    }

    pub fn param_count(self) -> usize {
        match self {
            Family::Linear
            | Family::Sinusoidal
            | Family::Logarithmic
            | Family::Exponential
            | Family::Power => 2,
            Family::Quadratic | Family::Gaussian => 3,
            Family::Cubic => 4,
        }
    }

    /// `true` when the model is linear in its parameters.
    pub fn is_linear_in_params(self) -> bool {
        matches!(
            self,
            Family::Linear
                | Family::Quadratic
                | Family::Cubic
                | Family::Sinusoidal
                | Family::Logarithmic
        )
    }

    fn requires_positive_x(self) -> bool {
        matches!(self, Family::Logarithmic | Family::Power)
    }

    fn value(self, t: &[f64], x: f64) -> f64 {
        match self {
            Family::Linear => t[0] * x + t[1],
            Family::Quadratic => (t[0] * x + t[1]) * x + t[2],
            Family::Cubic => ((t[0] * x + t[1]) * x + t[2]) * x + t[3],
            Family::Sinusoidal => t[0] * x.sin() + t[1] * x.cos(),
            Family::Logarithmic => t[0] * x.ln() + t[1],
            Family::Exponential => t[0] * (t[1] * x).exp(),
            Family::Gaussian => {
                let s = t[2].abs();
                let d = x - t[1];
                t[0] * (-d * d / (2.0 * s * s)).exp()
            }
            Family::Power => t[0] * x.powf(t[1]),
        }
    }

    fn gradient(self, t: &[f64], x: f64, out: &mut [f64]) {
        match self {
            Family::Linear => out.copy_from_slice(&[x, 1.0]),
            Family::Quadratic => out.copy_from_slice(&[x * x, x, 1.0]),
            Family::Cubic => out.copy_from_slice(&[x * x * x, x * x, x, 1.0]),
            Family::Sinusoidal => out.copy_from_slice(&[x.sin(), x.cos()]),
            Family::Logarithmic => out.copy_from_slice(&[x.ln(), 1.0]),
            Family::Exponential => {
                let e = (t[1] * x).exp();
                out.copy_from_slice(&[e, t[0] * x * e]);
            }
            Family::Gaussian => {
                let s = t[2].abs();
                let d = x - t[1];
                let g = (-d * d / (2.0 * s * s)).exp();
                let f = t[0] * g;
                // d/ds of −d²/(2s²) is d²/s³ for either sign of s since s² = |s|².
                out.copy_from_slice(&[g, f * d / (s * s), f * d * d / (s * s * t[2])]);
            }
            Family::Power => {
                let p = x.powf(t[1]);
                out.copy_from_slice(&[p, t[0] * p * x.ln()]);
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// User-supplied model body `(θ, x) ↦ ŷ`. A non-finite return value marks
/// `x` as outside the model's domain.
pub type ModelFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianKind {
    Analytic,
    FiniteDifference,
}

#[derive(Clone)]
enum Body {
    Builtin(Family),
    User(ModelFn),
}

/// A named parametric family. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct ModelSpec {
    name: String,
    param_count: usize,
    body: Body,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("param_count", &self.param_count)
            .field("jacobian", &self.jacobian_kind())
            .finish()
    }
}

/// All eight builtin families, in their canonical order.
pub fn builtin_models() -> Vec<ModelSpec> {
    Family::ALL.into_iter().map(ModelSpec::builtin).collect()
}

impl ModelSpec {
    pub fn builtin(family: Family) -> Self {
        Self {
            name: family.name().to_string(),
            param_count: family.param_count(),
            body: Body::Builtin(family),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Family::from_name(name).map(Self::builtin)
    }

    /// Wraps a user function; its Jacobian is taken by central differences.
    pub fn custom(
        name: impl Into<String>,
        param_count: usize,
        f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(param_count > 0, "a model needs at least one parameter");
        Self {
            name: name.into(),
            param_count,
            body: Body::User(Arc::new(f)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn family(&self) -> Option<Family> {
        match self.body {
            Body::Builtin(f) => Some(f),
            Body::User(_) => None,
        }
    }

    pub fn jacobian_kind(&self) -> JacobianKind {
        match self.body {
            Body::Builtin(_) => JacobianKind::Analytic,
            Body::User(_) => JacobianKind::FiniteDifference,
        }
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count {
            return Err(Error::ParamCount {
                expected: self.param_count,
                got: theta.len(),
            });
        }
        Ok(())
    }

    fn point(&self, theta: &[f64], x: f64, index: usize) -> Result<f64> {
        match &self.body {
            Body::Builtin(f) => {
                if f.requires_positive_x() && x <= 0.0 {
                    return Err(Error::DomainError { index });
                }
                let v = f.value(theta, x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite(format!("{} at index {index}", self.name)))
                }
            }
            Body::User(f) => {
                let v = f(theta, x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::DomainError { index })
                }
            }
        }
    }

    /// Elementwise `f(x_i; θ)`.
    pub fn evaluate(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        x.iter()
            .enumerate()
            .map(|(i, &xi)| self.point(theta, xi, i))
            .collect()
    }

    /// `len(x) × param_count` matrix of `∂f(x_i; θ)/∂θ_j`.
    pub fn jacobian(&self, theta: &[f64], x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_theta(theta)?;
        let p = self.param_count;
        let mut jac = DMatrix::zeros(x.len(), p);
        let mut row = vec![0.0; p];
        let mut shifted = theta.to_vec();
        for (i, &xi) in x.iter().enumerate() {
            match &self.body {
                Body::Builtin(f) => {
                    self.point(theta, xi, i)?;
                    f.gradient(theta, xi, &mut row);
                }
                Body::User(_) => {
                    for j in 0..p {
                        let h = (1e-6 * theta[j].abs()).max(1e-6);
                        shifted[j] = theta[j] + h;
                        let up = self.point(&shifted, xi, i)?;
                        shifted[j] = theta[j] - h;
                        let down = self.point(&shifted, xi, i)?;
                        shifted[j] = theta[j];
                        row[j] = (up - down) / (2.0 * h);
                    }
                }
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("jacobian entry {v} at index {i}")));
            }
            for (j, v) in row.iter().enumerate() {
                jac[(i, j)] = *v;
            }
        }
        Ok(jac)
    }

    /// Family-specific starting point for local fitting.
    ///
    /// Linear-in-parameter families get their exact least-squares solution,
    /// exponential and power families a log-linear / log-log regression, and
    /// the gaussian a moment-style guess. Falls back to all ones whenever the
    /// heuristic is degenerate or the dataset is incomplete. User models
    /// always start at all ones.
    pub fn default_init(&self, d: &Dataset) -> ParamVector {
        let fallback = ParamVector::ones(self.param_count);
        let Body::Builtin(family) = self.body else {
            return fallback;
        };
        let Ok((x, y)) = d.xy() else {
            return fallback;
        };
        let guess = match family {
            Family::Linear => basis_fit(&x, &y, |x| vec![x, 1.0]),
            Family::Quadratic => basis_fit(&x, &y, |x| vec![x * x, x, 1.0]),
            Family::Cubic => basis_fit(&x, &y, |x| vec![x * x * x, x * x, x, 1.0]),
            Family::Sinusoidal => basis_fit(&x, &y, |x| vec![x.sin(), x.cos()]),
            Family::Logarithmic => {
                if x.iter().all(|&v| v > 0.0) {
                    basis_fit(&x, &y, |x| vec![x.ln(), 1.0])
                } else {
                    None
                }
            }
            Family::Exponential => exponential_init(&x, &y),
            Family::Power => power_init(&x, &y),
            Family::Gaussian => gaussian_init(&x, &y),
        };
        guess
            .filter(|g| g.len() == self.param_count)
            .and_then(|g| ParamVector::new(g).ok())
            .unwrap_or(fallback)
    }
}

fn basis_fit(x: &[f64], y: &[f64], row: impl Fn(f64) -> Vec<f64>) -> Option<Vec<f64>> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| row(v)).collect();
    let cols = rows.first()?.len();
    let a = DMatrix::from_fn(x.len(), cols, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let sol = lstsq(&a, &b);
    sol.iter().all(|v| v.is_finite()).then(|| sol.iter().copied().collect())
}

/// Slope and intercept of a simple regression; `None` when `x` is constant.
fn line_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn exponential_init(x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, y)| **y != 0.0)
        .map(|(x, y)| (*x, y.abs().ln()))
        .unzip();
    let (b, ln_a) = line_fit(&lx, &ly)?;
    let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    Some(vec![sign * ln_a.exp(), b])
}

fn power_init(x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    if x.iter().chain(y).any(|&v| v <= 0.0) {
        return Some(vec![1.0, 1.0]);
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (b, ln_a) = line_fit(&lx, &ly)?;
    Some(vec![ln_a.exp(), b])
}

fn gaussian_init(x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    if x.len() < 2 {
        return None;
    }
    let peak = y
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if v.abs() > y[best].abs() { i } else { best });
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let s = var.sqrt();
    if s <= 0.0 {
        return None;
    }
    let a = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(vec![a, x[peak], s])
}
