//! Linear basis-function regression `ŷ = θ₀ + Σ θ_j φ_j(x)` with optional
//! ridge, lasso or elastic-net penalties, and ranking of candidate models.
//!
//! Column 0 of every design matrix is the intercept and is never penalized.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::local::{fit_xy, LocalConfig};
use crate::metrics::{model_analysis, Metrics};
use crate::models::{Family, ModelSpec, ParamVector};

pub const MAX_POLY_DEGREE: usize = 10;
pub const MAX_HARMONICS: usize = 10;

/// A named scalar transform for custom bases.
#[derive(Clone)]
pub struct BasisFn {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl BasisFn {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }
}

impl fmt::Debug for BasisFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasisFn({})", self.name)
    }
}

/// Basis expansion. The intercept column is always included.
#[derive(Debug, Clone)]
pub enum BasisSpec {
    /// `x, x², …, x^degree`
    Polynomial(usize),
    /// `sin(jx), cos(jx)` for `j = 1..=harmonics`
    Sinusoidal(usize),
    /// `ln x`
    Logarithmic,
    /// `a·e^{bx}`, fitted as a nonlinear model on the original scale.
    ExponentialLink,
    /// `a·x^b`, fitted as a nonlinear model on the original scale.
    PowerLink,
    Custom(Vec<BasisFn>),
}

impl BasisSpec {
    pub fn includes_intercept(&self) -> bool {
        true
    }

    pub fn name(&self) -> String {
        match self {
            BasisSpec::Polynomial(1) => "linear".into(),
            BasisSpec::Polynomial(2) => "quadratic".into(),
            BasisSpec::Polynomial(3) => "cubic".into(),
            BasisSpec::Polynomial(d) => format!("polynomial:{d}"),
            BasisSpec::Sinusoidal(1) => "sinusoidal".into(),
            BasisSpec::Sinusoidal(h) => format!("sinusoidal:{h}"),
            BasisSpec::Logarithmic => "logarithmic".into(),
            BasisSpec::ExponentialLink => "exponential".into(),
            BasisSpec::PowerLink => "power".into(),
            BasisSpec::Custom(fs) => {
                let names: Vec<&str> = fs.iter().map(|f| f.name.as_str()).collect();
                format!("custom:{}", names.join("+"))
            }
        }
    }

    /// Columns including the intercept; `None` for the link kinds.
    pub fn n_columns(&self) -> Option<usize> {
        match self {
            BasisSpec::Polynomial(d) => Some(d + 1),
            BasisSpec::Sinusoidal(h) => Some(2 * h + 1),
            BasisSpec::Logarithmic => Some(2),
            BasisSpec::Custom(fs) => Some(fs.len() + 1),
            BasisSpec::ExponentialLink | BasisSpec::PowerLink => None,
        }
    }

    /// Nonlinear model standing in for the link kinds.
    pub fn nonlinear_model(&self) -> Option<ModelSpec> {
        match self {
            BasisSpec::ExponentialLink => Some(ModelSpec::builtin(Family::Exponential)),
            BasisSpec::PowerLink => Some(ModelSpec::builtin(Family::Power)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            BasisSpec::Polynomial(d) if *d > MAX_POLY_DEGREE => Err(Error::InvalidConfig(format!(
                "polynomial degree {d} exceeds {MAX_POLY_DEGREE}"
            ))),
            BasisSpec::Sinusoidal(h) if *h == 0 || *h > MAX_HARMONICS => Err(Error::InvalidConfig(
                format!("harmonics must lie in 1..={MAX_HARMONICS}, got {h}"),
            )),
            BasisSpec::ExponentialLink | BasisSpec::PowerLink => Err(Error::InvalidConfig(format!(
                "`{}` is fitted as a nonlinear model and has no design matrix",
                self.name()
            ))),
            _ => Ok(()),
        }
    }
}

/// `n × (p + 1)` matrix `[1, φ₁(x), …, φ_p(x)]`.
pub fn design_matrix(basis: &BasisSpec, x: &[f64]) -> Result<DMatrix<f64>> {
    basis.validate()?;
    let cols = basis.n_columns().expect("validated");
    let mut phi = DMatrix::zeros(x.len(), cols);
    for (i, &xi) in x.iter().enumerate() {
        phi[(i, 0)] = 1.0;
        match basis {
            BasisSpec::Polynomial(d) => {
                let mut p = 1.0;
                for j in 1..=*d {
                    p *= xi;
                    phi[(i, j)] = p;
                }
            }
            BasisSpec::Sinusoidal(h) => {
                for j in 1..=*h {
                    let a = j as f64 * xi;
                    phi[(i, 2 * j - 1)] = a.sin();
                    phi[(i, 2 * j)] = a.cos();
                }
            }
            BasisSpec::Logarithmic => {
                if xi <= 0.0 {
                    return Err(Error::DomainError { index: i });
                }
                phi[(i, 1)] = xi.ln();
            }
            BasisSpec::Custom(fs) => {
                for (j, bf) in fs.iter().enumerate() {
                    let v = (bf.f)(xi);
                    if !v.is_finite() {
                        return Err(Error::DomainError { index: i });
                    }
                    phi[(i, j + 1)] = v;
                }
            }
            BasisSpec::ExponentialLink | BasisSpec::PowerLink => unreachable!("validated"),
        }
    }
    Ok(phi)
}

fn check_shapes(phi: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if phi.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "design has {} rows, y has {} entries",
            phi.nrows(),
            y.len()
        )));
    }
    if phi.nrows() < phi.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows for {} columns",
            phi.nrows(),
            phi.ncols()
        )));
    }
    Ok(())
}

fn to_params(v: DVector<f64>) -> Result<ParamVector> {
    ParamVector::new(v.iter().copied().collect())
}

/// Least squares by pivoted QR; minimum-norm when `phi` is rank deficient.
pub fn ols_fit(phi: &DMatrix<f64>, y: &[f64]) -> Result<ParamVector> {
    check_shapes(phi, y)?;
    to_params(lstsq(phi, &DVector::from_column_slice(y)))
}

/// Minimizes `‖y − Φθ‖² + λ‖θ₁..‖²` through the augmented system
/// `[Φ; √λ·E] θ = [y; 0]`, where `E` selects the non-intercept columns.
pub fn ridge_fit(phi: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<ParamVector> {
    check_shapes(phi, y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("ridge lambda must be ≥ 0, got {lambda}")));
    }
    let (n, k) = phi.shape();
    let mut a = DMatrix::zeros(n + k - 1, k);
    a.view_mut((0, 0), (n, k)).copy_from(phi);
    let root = lambda.sqrt();
    for j in 1..k {
        a[(n + j - 1, j)] = root;
    }
    let mut b = DVector::zeros(n + k - 1);
    b.rows_mut(0, n).copy_from_slice(y);
    to_params(lstsq(&a, &b))
}

pub const LASSO_TOL: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoFit {
    pub theta: ParamVector,
    pub converged: bool,
    pub sweeps: usize,
}

struct Standardized {
    z: DMatrix<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    y_mean: f64,
    y_centered: Vec<f64>,
}

/// Centers and scales the non-intercept columns to unit population variance.
fn standardize(phi: &DMatrix<f64>, y: &[f64]) -> Standardized {
    let (n, k) = phi.shape();
    let nf = n as f64;
    let mut z = DMatrix::zeros(n, k - 1);
    let mut means = Vec::with_capacity(k - 1);
    let mut scales = Vec::with_capacity(k - 1);
    for j in 1..k {
        let col = phi.column(j);
        let m = col.sum() / nf;
        let s = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf).sqrt();
        for i in 0..n {
            z[(i, j - 1)] = if s > 0.0 { (col[i] - m) / s } else { 0.0 };
        }
        means.push(m);
        scales.push(s);
    }
    let y_mean = y.iter().sum::<f64>() / nf;
    Standardized {
        z,
        means,
        scales,
        y_mean,
        y_centered: y.iter().map(|v| v - y_mean).collect(),
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Smallest penalty at which every slope is zero:
/// `max_j |z_jᵀ(y − ȳ)| / (n·α)` on standardized columns.
pub fn lasso_lambda_max(phi: &DMatrix<f64>, y: &[f64], alpha: f64) -> Result<f64> {
    check_shapes(phi, y)?;
    let s = standardize(phi, y);
    let n = y.len() as f64;
    let yc = DVector::from_column_slice(&s.y_centered);
    let max = s.z.tr_mul(&yc).amax() / n;
    Ok(if alpha > 0.0 { max / alpha } else { f64::INFINITY })
}

/// Elastic net by cyclic coordinate descent on standardized columns:
/// minimizes `(1/2n)‖y − Φθ‖² + λ(α‖θ₁..‖₁ + (1 − α)/2·‖θ₁..‖²)`.
///
/// `alpha = 1` is the lasso. Coefficients come back on the original column
/// scale. Exhausting the sweep budget is not an error; check `converged`.
pub fn lasso_fit(phi: &DMatrix<f64>, y: &[f64], lambda: f64, alpha: f64) -> Result<LassoFit> {
    check_shapes(phi, y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be ≥ 0, got {lambda}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let s = standardize(phi, y);
    let (n, p) = s.z.shape();
    let nf = n as f64;
    let l1 = lambda * alpha;
    let shrink = 1.0 + lambda * (1.0 - alpha);

    let mut beta = vec![0.0; p];
    let mut resid = s.y_centered.clone();
    let mut converged = p == 0;
    let mut sweeps = 0;
    while !converged && sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if s.scales[j] == 0.0 {
                continue;
            }
            let col = s.z.column(j);
            let rho = col.iter().zip(&resid).map(|(z, r)| z * r).sum::<f64>() / nf + beta[j];
            let new = soft_threshold(rho, l1) / shrink;
            let delta = new - beta[j];
            if delta != 0.0 {
                for (r, z) in resid.iter_mut().zip(col.iter()) {
                    *r -= z * delta;
                }
                beta[j] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        converged = max_change < LASSO_TOL;
    }

    let slopes: Vec<f64> = beta
        .iter()
        .zip(&s.scales)
        .map(|(b, sc)| if *sc > 0.0 { b / sc } else { 0.0 })
        .collect();
    let intercept = s.y_mean - slopes.iter().zip(&s.means).map(|(t, m)| t * m).sum::<f64>();
    let mut theta = Vec::with_capacity(p + 1);
    theta.push(intercept);
    theta.extend(slopes);
    Ok(LassoFit {
        theta: ParamVector::new(theta)?,
        converged,
        sweeps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    None,
    Ridge { lambda: f64 },
    Lasso { lambda: f64 },
    ElasticNet { lambda: f64, alpha: f64 },
}

/// A fitted basis-function regression.
#[derive(Debug, Clone)]
pub struct RegressionModel {
    pub basis: BasisSpec,
    pub theta: ParamVector,
    pub regularizer: Regularizer,
    pub training_metrics: Metrics,
}

impl RegressionModel {
    pub fn fit(basis: BasisSpec, x: &[f64], y: &[f64], regularizer: Regularizer) -> Result<Self> {
        let phi = design_matrix(&basis, x)?;
        let theta = match regularizer {
            Regularizer::None => ols_fit(&phi, y)?,
            Regularizer::Ridge { lambda } => ridge_fit(&phi, y, lambda)?,
            Regularizer::Lasso { lambda } => lasso_fit(&phi, y, lambda, 1.0)?.theta,
            Regularizer::ElasticNet { lambda, alpha } => lasso_fit(&phi, y, lambda, alpha)?.theta,
        };
        let fitted = &phi * DVector::from_column_slice(&theta);
        let training_metrics = model_analysis(y, fitted.as_slice())?;
        Ok(Self { basis, theta, regularizer, training_metrics })
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let phi = design_matrix(&self.basis, x)?;
        Ok((&phi * DVector::from_column_slice(&self.theta)).iter().copied().collect())
    }
}

/// One entry in a model-selection run.
#[derive(Debug, Clone)]
pub enum Candidate {
    Basis(BasisSpec),
    Model(ModelSpec),
}

impl Candidate {
    pub fn name(&self) -> String {
        match self {
            Candidate::Basis(b) => b.name(),
            Candidate::Model(m) => m.name().to_string(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Candidate::Basis(b) => match b.nonlinear_model() {
                Some(m) => m.param_count(),
                None => b.n_columns().unwrap_or(0),
            },
            Candidate::Model(m) => m.param_count(),
        }
    }
}

impl FromStr for Candidate {
    type Err = Error;

    /// Builtin family names, plus `polynomial:<degree>` and `sinusoidal:<harmonics>`.
    fn from_str(s: &str) -> Result<Self> {
        let num = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad number in candidate `{s}`")))
        };
        if let Some(d) = s.strip_prefix("polynomial:") {
            return Ok(Candidate::Basis(BasisSpec::Polynomial(num(d)?)));
        }
        if let Some(h) = s.strip_prefix("sinusoidal:") {
            return Ok(Candidate::Basis(BasisSpec::Sinusoidal(num(h)?)));
        }
        Ok(match Family::from_name(s)? {
            Family::Linear => Candidate::Basis(BasisSpec::Polynomial(1)),
            Family::Quadratic => Candidate::Basis(BasisSpec::Polynomial(2)),
            Family::Cubic => Candidate::Basis(BasisSpec::Polynomial(3)),
            Family::Sinusoidal => Candidate::Basis(BasisSpec::Sinusoidal(1)),
            Family::Logarithmic => Candidate::Basis(BasisSpec::Logarithmic),
            Family::Exponential => Candidate::Basis(BasisSpec::ExponentialLink),
            Family::Power => Candidate::Basis(BasisSpec::PowerLink),
            Family::Gaussian => Candidate::Model(ModelSpec::builtin(Family::Gaussian)),
        })
    }
}

/// One row of the selection table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub model_name: String,
    pub params: Vec<f64>,
    pub r_squared: Option<f64>,
    pub adj_r_squared: Option<f64>,
    pub mse: Option<f64>,
    pub rmse: Option<f64>,
    /// Why the candidate could not be fitted; such rows rank last.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub param_count: usize,
}

pub const TIE_TOLERANCE: f64 = 1e-9;

fn fit_candidate(c: &Candidate, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Metrics)> {
    let nonlinear = match c {
        Candidate::Basis(b) => b.nonlinear_model(),
        Candidate::Model(m) => Some(m.clone()),
    };
    match (c, nonlinear) {
        (_, Some(spec)) => {
            let d = Dataset::from_xy(x, y)?;
            let init = spec.default_init(&d);
            let r = fit_xy(&spec, x, y, &init, &LocalConfig::default())?;
            let pred = spec.evaluate(&r.theta_hat, x)?;
            Ok((r.theta_hat.into_inner(), model_analysis(y, &pred)?))
        }
        (Candidate::Basis(b), None) => {
            let m = RegressionModel::fit(b.clone(), x, y, Regularizer::None)?;
            Ok((m.theta.into_inner(), m.training_metrics))
        }
        (Candidate::Model(_), None) => unreachable!(),
    }
}

/// Fits every candidate and ranks them by adjusted R², highest first.
///
/// Adjusted R² counts `param_count − 1` predictors. Scores within
/// [`TIE_TOLERANCE`] tie and are broken by fewer parameters, then by the
/// order of `candidates`.
pub fn select_model(x: &[f64], y: &[f64], candidates: &[Candidate]) -> Result<Vec<Selection>> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate models".into()));
    }
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("x has {} entries, y {}", x.len(), y.len())));
    }
    let max_params = candidates.iter().map(Candidate::param_count).max().unwrap_or(0);
    if x.len() < max_params + 2 {
        return Err(Error::InsufficientData(format!(
            "{} points for candidates with up to {max_params} parameters",
            x.len()
        )));
    }

    let mut rows: Vec<Selection> = candidates
        .iter()
        .map(|c| {
            let param_count = c.param_count();
            match fit_candidate(c, x, y) {
                Ok((params, m)) => Selection {
                    model_name: c.name(),
                    params,
                    r_squared: m.r_squared,
                    adj_r_squared: m.adjusted_r_squared(param_count.saturating_sub(1)),
                    mse: Some(m.mse),
                    rmse: Some(m.rmse),
                    error: None,
                    param_count,
                },
                Err(e) => Selection {
                    model_name: c.name(),
                    params: Vec::new(),
                    r_squared: None,
                    adj_r_squared: None,
                    mse: None,
                    rmse: None,
                    error: Some(e.to_string()),
                    param_count,
                },
            }
        })
        .collect();

    let score = |s: &Selection| s.adj_r_squared.unwrap_or(f64::NEG_INFINITY);
    let beats = |a: &Selection, b: &Selection| {
        let (sa, sb) = (score(a), score(b));
        if (sa - sb).abs() <= TIE_TOLERANCE || (sa == sb) {
            a.param_count < b.param_count
        } else {
            sa > sb
        }
    };
    let mut ranked = Vec::with_capacity(rows.len());
    while !rows.is_empty() {
        let mut best = 0;
        for i in 1..rows.len() {
            if beats(&rows[i], &rows[best]) {
                best = i;
            }
        }
        ranked.push(rows.remove(best));
    }
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::fit;
    use proptest::prelude::*;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn design_matrices() {
        let phi = design_matrix(&BasisSpec::Polynomial(2), &[1.0, 2.0]).unwrap();
        assert_eq!(phi, DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 1.0, 2.0, 4.0]));
        let phi = design_matrix(&BasisSpec::Sinusoidal(1), &[0.0]).unwrap();
        assert_eq!(phi, DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]));
        assert_eq!(
            design_matrix(&BasisSpec::Logarithmic, &[-1.0]).unwrap_err(),
            Error::DomainError { index: 0 }
        );
        assert!(design_matrix(&BasisSpec::Polynomial(11), &[1.0]).is_err());
        assert!(design_matrix(&BasisSpec::Sinusoidal(0), &[1.0]).is_err());
        assert!(design_matrix(&BasisSpec::ExponentialLink, &[1.0]).is_err());
        let custom = BasisSpec::Custom(vec![BasisFn::new("sqrt", f64::sqrt)]);
        assert_eq!(design_matrix(&custom, &[4.0]).unwrap()[(0, 1)], 2.0);
        assert!(design_matrix(&custom, &[-4.0]).is_err());
    }

    #[test]
    fn ols_examples() {
        let x = [0.0, 1.0, 2.0];
        let y: Vec<f64> = x.iter().map(|x| 3.0 * x + 4.0).collect();
        let t = ols_fit(&design_matrix(&BasisSpec::Polynomial(1), &x).unwrap(), &y).unwrap();
        assert!((t[0] - 4.0).abs() < 1e-14 && (t[1] - 3.0).abs() < 1e-14);

        let x = grid(5, -2.0, 2.0);
        let y: Vec<f64> = x.iter().map(|x| 2.0 * x * x - 5.0 * x + 3.0).collect();
        let t = ols_fit(&design_matrix(&BasisSpec::Polynomial(2), &x).unwrap(), &y).unwrap();
        for (a, b) in t.iter().zip([3.0, -5.0, 2.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ols_rank_deficient_matches_pseudoinverse() {
        let phi = DMatrix::from_row_slice(4, 3, &[
            1.0, 0.5, 0.5, 1.0, 1.5, 1.5, 1.0, -2.0, -2.0, 1.0, 3.0, 3.0,
        ]);
        let y = [1.0, 2.0, -1.0, 4.5];
        let t = ols_fit(&phi, &y).unwrap();
        let pinv = phi.clone().pseudo_inverse(1e-12).unwrap();
        let oracle = pinv * DVector::from_column_slice(&y);
        assert!((DVector::from_column_slice(&t) - &oracle).amax() < 1e-10);
        // Same residual as the full-rank fit with the duplicate removed.
        let reduced = phi.columns(0, 2).into_owned();
        let tr = ols_fit(&reduced, &y).unwrap();
        let r_full = DVector::from_column_slice(&y) - &phi * DVector::from_column_slice(&t);
        let r_red = DVector::from_column_slice(&y) - &reduced * DVector::from_column_slice(&tr);
        assert!((r_full - r_red).amax() < 1e-10);
    }

    #[test]
    fn shape_errors() {
        let phi = DMatrix::zeros(2, 3);
        assert!(matches!(ols_fit(&phi, &[1.0, 2.0]), Err(Error::ShapeMismatch(_))));
        let phi = DMatrix::zeros(3, 2);
        assert!(matches!(ridge_fit(&phi, &[1.0], 1.0), Err(Error::ShapeMismatch(_))));
        assert!(matches!(lasso_fit(&phi, &[1.0], 1.0, 1.0), Err(Error::ShapeMismatch(_))));
    }

    fn noisy_cubic(n: usize) -> (Vec<f64>, Vec<f64>) {
        let x = grid(n, -1.0, 1.0);
        let y = x
            .iter()
            .enumerate()
            .map(|(i, x)| 1.0 + 2.0 * x - 0.5 * x * x + 0.8 * x * x * x + 0.05 * ((i * 7919) % 13) as f64)
            .collect();
        (x, y)
    }

    #[test]
    fn ridge_limits() {
        let (x, y) = noisy_cubic(40);
        let phi = design_matrix(&BasisSpec::Polynomial(3), &x).unwrap();
        let ols = ols_fit(&phi, &y).unwrap();
        let r0 = ridge_fit(&phi, &y, 0.0).unwrap();
        for (a, b) in ols.iter().zip(r0.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        // x is symmetric about 0, so the odd columns are centered; use a
        // one-feature centered design for the limit.
        let phi1 = design_matrix(&BasisSpec::Polynomial(1), &x).unwrap();
        let big = ridge_fit(&phi1, &y, 1e12).unwrap();
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        assert!(big[1].abs() < 1e-6 && (big[0] - ybar).abs() < 1e-6);
        assert!(matches!(ridge_fit(&phi, &y, -1.0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn ridge_one_feature_closed_form() {
        let (x, y) = noisy_cubic(31);
        // Grid is symmetric, so Σx = 0.
        assert!(x.iter().sum::<f64>().abs() < 1e-12);
        let phi = design_matrix(&BasisSpec::Polynomial(1), &x).unwrap();
        let t = ridge_fit(&phi, &y, 1.0).unwrap();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        assert!((t[1] - sxy / (sxx + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn lasso_limits() {
        let (x, y) = noisy_cubic(60);
        let phi = design_matrix(&BasisSpec::Polynomial(2), &x).unwrap();
        let ols = ols_fit(&phi, &y).unwrap();
        let l0 = lasso_fit(&phi, &y, 0.0, 1.0).unwrap();
        assert!(l0.converged);
        for (a, b) in ols.iter().zip(l0.theta.iter()) {
            assert!((a - b).abs() < 1e-6, "{ols:?} vs {l0:?}");
        }
        let lmax = lasso_lambda_max(&phi, &y, 1.0).unwrap();
        for scale in [1.0, 1.5, 10.0] {
            let fit = lasso_fit(&phi, &y, lmax * scale, 1.0).unwrap();
            assert!(fit.theta[1..].iter().all(|v| *v == 0.0));
            let ybar = y.iter().sum::<f64>() / y.len() as f64;
            assert!((fit.theta[0] - ybar).abs() < 1e-12);
        }
        let just_below = lasso_fit(&phi, &y, lmax * 0.99, 1.0).unwrap();
        assert!(just_below.theta[1..].iter().any(|v| *v != 0.0));
    }

    #[test]
    fn lasso_single_standardized_feature() {
        // Mean 0, population variance 1.
        let z = [-1.5, -0.5, 0.5, 1.5];
        let s = (z.iter().map(|v| v * v).sum::<f64>() / 4.0).sqrt();
        let z: Vec<f64> = z.iter().map(|v| v / s).collect();
        let y = [0.3, -0.2, 1.1, 2.0];
        let phi = DMatrix::from_fn(4, 2, |i, j| if j == 0 { 1.0 } else { z[i] });
        let zy: f64 = z.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / 4.0;
        for lambda in [0.0, 0.1, 0.5, 2.0] {
            let fit = lasso_fit(&phi, &y, lambda, 1.0).unwrap();
            assert!((fit.theta[1] - soft_threshold(zy, lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn elastic_net_sits_between() {
        let (x, y) = noisy_cubic(50);
        let phi = design_matrix(&BasisSpec::Polynomial(3), &x).unwrap();
        let en = lasso_fit(&phi, &y, 0.05, 0.5).unwrap();
        assert!(en.converged);
        assert!(matches!(lasso_fit(&phi, &y, 0.1, 1.5), Err(Error::InvalidConfig(_))));
        let m = RegressionModel::fit(
            BasisSpec::Polynomial(3),
            &x,
            &y,
            Regularizer::ElasticNet { lambda: 0.05, alpha: 0.5 },
        )
        .unwrap();
        assert_eq!(m.theta, en.theta);
        assert!(m.training_metrics.r_squared.unwrap() > 0.9);
        assert_eq!(m.predict(&x[..3]).unwrap().len(), 3);
    }

    #[test]
    fn ols_residual_is_orthogonal_to_columns() {
        let (x, y) = noisy_cubic(40);
        for basis in [BasisSpec::Polynomial(4), BasisSpec::Sinusoidal(3)] {
            let phi = design_matrix(&basis, &x).unwrap();
            let t = ols_fit(&phi, &y).unwrap();
            let yv = DVector::from_column_slice(&y);
            let r = &yv - &phi * DVector::from_column_slice(&t);
            assert!(phi.tr_mul(&r).amax() <= 1e-8 * yv.norm());
        }
    }

    #[test]
    fn ridge_norm_shrinks_and_lasso_sparsifies() {
        let (x, y) = noisy_cubic(50);
        let phi = design_matrix(&BasisSpec::Polynomial(5), &x).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0] {
            let t = ridge_fit(&phi, &y, lambda).unwrap();
            let norm = t[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= last + 1e-12);
            last = norm;
        }
        let lmax = lasso_lambda_max(&phi, &y, 1.0).unwrap();
        let mut last_nnz = usize::MAX;
        for frac in [0.001, 0.01, 0.05, 0.2, 0.5, 0.9, 1.0] {
            let fit = lasso_fit(&phi, &y, lmax * frac, 1.0).unwrap();
            let nnz = fit.theta[1..].iter().filter(|v| **v != 0.0).count();
            assert!(nnz <= last_nnz, "frac {frac}: {nnz} > {last_nnz}");
            last_nnz = nnz;
        }
        assert_eq!(last_nnz, 0);
    }

    #[test]
    fn lm_reaches_the_ols_solution_on_linear_families() {
        let (x, y) = noisy_cubic(40);
        let xp: Vec<f64> = x.iter().map(|v| v + 2.0).collect();
        let d = Dataset::from_xy(&xp, &y).unwrap();
        for (family, basis, order) in [
            (Family::Linear, BasisSpec::Polynomial(1), vec![1, 0]),
            (Family::Quadratic, BasisSpec::Polynomial(2), vec![2, 1, 0]),
            (Family::Cubic, BasisSpec::Polynomial(3), vec![3, 2, 1, 0]),
        ] {
            let spec = ModelSpec::builtin(family);
            let r = fit(&spec, &d, &vec![0.0; spec.param_count()], &LocalConfig::default()).unwrap();
            let ols = ols_fit(&design_matrix(&basis, &xp).unwrap(), &y).unwrap();
            for (j, &k) in order.iter().enumerate() {
                assert!((r.theta_hat[j] - ols[k]).abs() <= 1e-8 * ols[k].abs().max(1.0), "{family}");
            }
        }
        // Sinusoidal has no intercept: compare with a two-column design.
        let spec = ModelSpec::builtin(Family::Sinusoidal);
        let r = fit(&spec, &d, &[0.0, 0.0], &LocalConfig::default()).unwrap();
        let phi = DMatrix::from_fn(xp.len(), 2, |i, j| if j == 0 { xp[i].sin() } else { xp[i].cos() });
        let ols = ols_fit(&phi, &y).unwrap();
        for j in 0..2 {
            assert!((r.theta_hat[j] - ols[j]).abs() <= 1e-8 * ols[j].abs().max(1.0));
        }
    }

    fn cands(names: &[&str]) -> Vec<Candidate> {
        names.iter().map(|n| n.parse().unwrap()).collect()
    }

    #[test]
    fn selection_prefers_parsimony_on_ties() {
        let x = grid(50, 1.0, 10.0);
        let y: Vec<f64> = x.iter().map(|x| 3.0 * x + 4.0).collect();
        let ranked = select_model(&x, &y, &cands(&["cubic", "quadratic", "linear"])).unwrap();
        assert_eq!(ranked[0].model_name, "linear");
        assert!(ranked[0].r_squared.unwrap() >= 0.9999);

        let y: Vec<f64> = x.iter().map(|x| 2.0 * x * x - 5.0 * x + 3.0).collect();
        let ranked = select_model(&x, &y, &cands(&["linear", "quadratic"])).unwrap();
        assert_eq!(ranked[0].model_name, "quadratic");
        assert!(ranked[0].r_squared.unwrap() >= 0.9999);

        let single = select_model(&x, &y, &cands(&["gaussian"])).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].model_name, "gaussian");
    }

    #[test]
    fn selection_errors_and_failed_candidates() {
        let x = grid(6, -1.0, 1.0);
        let y: Vec<f64> = x.iter().map(|x| x * 2.0).collect();
        assert!(matches!(select_model(&x, &y, &[]), Err(Error::InvalidConfig(_))));
        assert!(matches!(
            select_model(&x[..4], &y[..4], &cands(&["cubic"])),
            Err(Error::InsufficientData(_))
        ));
        let ranked = select_model(&x, &y, &cands(&["logarithmic", "linear"])).unwrap();
        assert_eq!(ranked[0].model_name, "linear");
        assert!(ranked[1].error.is_some());
        let json = serde_json::to_value(&ranked[0]).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["adj_r_squared", "model_name", "mse", "params", "r_squared", "rmse"]);
    }

    #[test]
    fn candidate_parsing() {
        assert_eq!(cands(&["polynomial:5"])[0].param_count(), 6);
        assert_eq!(cands(&["sinusoidal:2"])[0].name(), "sinusoidal:2");
        assert_eq!(cands(&["exponential"])[0].param_count(), 2);
        assert!("polynomial:x".parse::<Candidate>().is_err());
        assert!("spline".parse::<Candidate>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ranking_ignores_candidate_order(seed in 0u64..500, rot in 0usize..5) {
            let x = grid(30, 0.5, 6.0);
            let y: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(i, x)| 1.0 + 0.4 * x * x + (((i as u64 + 1) * (seed + 3)) % 17) as f64 * 0.05)
                .collect();
            let names = ["linear", "quadratic", "cubic", "sinusoidal", "logarithmic"];
            let base = select_model(&x, &y, &cands(&names)).unwrap();
            let mut rotated = names.to_vec();
            rotated.rotate_left(rot);
            let other = select_model(&x, &y, &cands(&rotated)).unwrap();
            let a: Vec<_> = base.iter().map(|s| s.model_name.clone()).collect();
            let b: Vec<_> = other.iter().map(|s| s.model_name.clone()).collect();
            prop_assert_eq!(a, b);
            for s in &base {
                if s.param_count >= 2 {
                    prop_assert!(s.adj_r_squared.unwrap() <= s.r_squared.unwrap());
                }
            }
        }
    }
}
