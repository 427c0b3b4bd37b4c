//! Missing-value strategies for paired datasets.
//!
//! Every strategy except `Drop` fills missing `y` values and discards rows
//! whose `x` is missing. Present values are never altered.

use std::fmt;
use std::str::FromStr;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::local::{fit, LocalConfig};
use crate::models::ModelSpec;

#[derive(Debug, Clone)]
pub enum ImputeStrategy {
    /// Listwise deletion.
    Drop,
    Mean,
    Median,
    /// Linear interpolation in `x` between the nearest present neighbours.
    InterpolateLinear,
    /// Forward fill in row order; a leading gap is back-filled.
    Ffill,
    /// Backward fill in row order; a trailing gap is forward-filled.
    Bfill,
    /// Predict from a model fitted on the complete rows.
    Model(ModelSpec),
}

impl fmt::Display for ImputeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImputeStrategy::Drop => f.write_str("drop"),
            ImputeStrategy::Mean => f.write_str("mean"),
            ImputeStrategy::Median => f.write_str("median"),
            ImputeStrategy::InterpolateLinear => f.write_str("linear"),
            ImputeStrategy::Ffill => f.write_str("ffill"),
            ImputeStrategy::Bfill => f.write_str("bfill"),
            ImputeStrategy::Model(m) => write!(f, "model:{}", m.name()),
        }
    }
}

impl FromStr for ImputeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "drop" => Self::Drop,
            "mean" => Self::Mean,
            "median" => Self::Median,
            "linear" => Self::InterpolateLinear,
            "ffill" => Self::Ffill,
            "bfill" => Self::Bfill,
            _ => match s.strip_prefix("model:") {
                Some(name) => Self::Model(ModelSpec::by_name(name)?),
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown strategy `{s}`; expected drop, mean, median, linear, ffill, bfill or model:<name>"
                    )))
                }
            },
        })
    }
}

pub fn impute(d: &Dataset, strategy: &ImputeStrategy) -> Result<Dataset> {
    if let ImputeStrategy::Drop = strategy {
        return d.complete_pairs();
    }
    let (x, mut y): (Vec<f64>, Vec<Option<f64>>) = d
        .x()
        .iter()
        .zip(d.y())
        .filter_map(|(x, y)| x.map(|x| (x, *y)))
        .unzip();
    let present: Vec<f64> = y.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::NoObservedValues);
    }

    match strategy {
        ImputeStrategy::Drop => unreachable!(),
        ImputeStrategy::Mean => {
            let m = present.iter().sum::<f64>() / present.len() as f64;
            fill_constant(&mut y, m);
        }
        ImputeStrategy::Median => {
            let mut s = present.clone();
            s.sort_by(f64::total_cmp);
            let n = s.len();
            let m = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
            fill_constant(&mut y, m);
        }
        ImputeStrategy::InterpolateLinear => interpolate(&x, &mut y),
        ImputeStrategy::Ffill => {
            fill_forward(&mut y);
            fill_backward(&mut y);
        }
        ImputeStrategy::Bfill => {
            fill_backward(&mut y);
            fill_forward(&mut y);
        }
        ImputeStrategy::Model(spec) => {
            let complete = d.complete_pairs()?;
            if complete.len() < spec.param_count() {
                return Err(Error::InsufficientData(format!(
                    "{} complete rows for a {}-parameter model",
                    complete.len(),
                    spec.param_count()
                )));
            }
            let init = spec.default_init(&complete);
            let fitted = fit(spec, &complete, &init, &LocalConfig::default())?;
            let missing_x: Vec<f64> = x
                .iter()
                .zip(&y)
                .filter(|(_, y)| y.is_none())
                .map(|(x, _)| *x)
                .collect();
            let mut predictions = spec.evaluate(&fitted.theta_hat, &missing_x)?.into_iter();
            for v in y.iter_mut().filter(|v| v.is_none()) {
                *v = predictions.next();
            }
        }
    }

    Ok(Dataset::new(x.into_iter().map(Some).collect(), y)?.with_names(d.x_name(), d.y_name()))
}

fn fill_constant(y: &mut [Option<f64>], value: f64) {
    for v in y.iter_mut().filter(|v| v.is_none()) {
        *v = Some(value);
    }
}

fn fill_forward(y: &mut [Option<f64>]) {
    let mut last = None;
    for v in y.iter_mut() {
        match v {
            Some(p) => last = Some(*p),
            None => *v = last,
        }
    }
}

fn fill_backward(y: &mut [Option<f64>]) {
    let mut next = None;
    for v in y.iter_mut().rev() {
        match v {
            Some(p) => next = Some(*p),
            None => *v = next,
        }
    }
}

fn interpolate(x: &[f64], y: &mut [Option<f64>]) {
    let mut known: Vec<(f64, f64)> = x
        .iter()
        .zip(y.iter())
        .filter_map(|(x, y)| y.map(|y| (*x, y)))
        .collect();
    known.sort_by(|a, b| a.0.total_cmp(&b.0));

    for (xi, v) in x.iter().zip(y.iter_mut()) {
        if v.is_some() {
            continue;
        }
        // First known point with x ≥ xi.
        let upper = known.partition_point(|p| p.0 < *xi);
        let filled = if upper == known.len() {
            known[known.len() - 1].1
        } else if known[upper].0 == *xi || upper == 0 {
            known[upper].1
        } else {
            let (x0, y0) = known[upper - 1];
            let (x1, y1) = known[upper];
            y0 + (y1 - y0) * (xi - x0) / (x1 - x0)
        };
        *v = Some(filled);
    }
}
