//! Descriptive statistics over the present entries of a series.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub count: usize,
    pub unique_count: usize,
    /// `(1/n) Σ z³`, z standardized by the population std.
    pub skewness: f64,
    /// `(1/n) Σ z⁴ − 3`.
    pub excess_kurtosis: f64,
    /// Set when only one value is present and `std` is reported as 0.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

pub fn summary_statistics(x: &[Option<f64>]) -> Result<SummaryStats> {
    let mut values: Vec<f64> = x.iter().flatten().copied().collect();
    summarize(&mut values)
}

/// Same as [`summary_statistics`] for a series with nothing missing.
pub fn summary_of(x: &[f64]) -> Result<SummaryStats> {
    summarize(&mut x.to_vec())
}

fn summarize(values: &mut [f64]) -> Result<SummaryStats> {
    let n = values.len();
    if n == 0 {
        return Err(Error::NoObservedValues);
    }
    // Sorting first makes every sum below order-independent.
    values.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let std = if n > 1 { (ss / (nf - 1.0)).sqrt() } else { 0.0 };
    let pop_std = (ss / nf).sqrt();

    let (skewness, excess_kurtosis) = if pop_std > 0.0 {
        let (m3, m4) = values.iter().fold((0.0, 0.0), |(s3, s4), v| {
            let z = (v - mean) / pop_std;
            (s3 + z * z * z, s4 + z * z * z * z)
        });
        (m3 / nf, m4 / nf - 3.0)
    } else {
        (0.0, 0.0)
    };

    let median = if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    };
    let unique_count = values.iter().map(|v| v.to_bits()).collect::<HashSet<_>>().len();

    Ok(SummaryStats {
        mean,
        std,
        min: values[0],
        max: values[n - 1],
        median,
        count: n,
        unique_count,
        skewness,
        excess_kurtosis,
        degenerate: n == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn eight_values() {
        let s = summary_of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-14);
        assert!((s.std - 2.138).abs() < 1e-3);
        assert_eq!((s.min, s.max, s.median), (2.0, 9.0, 4.5));
        assert_eq!((s.count, s.unique_count), (8, 5));
        // Population std is 2; z = [-1.5,-.5,-.5,-.5,0,0,1,2].
        assert!((s.skewness - 0.65625).abs() < 1e-14);
        assert!((s.excess_kurtosis - (-0.21875)).abs() < 1e-14);
    }

    #[test]
    fn constant_series() {
        let s = summary_of(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.skewness, s.excess_kurtosis), (3.0, 0.0, 0.0, 0.0));
        assert_eq!(s.unique_count, 1);
    }

    #[test]
    fn missing_entries_are_excluded() {
        let s = summary_statistics(&[Some(1.0), None, Some(3.0)]).unwrap();
        assert_eq!((s.count, s.mean), (2, 2.0));
        assert_eq!(summary_statistics(&[None, None]).unwrap_err(), Error::NoObservedValues);
    }

    #[test]
    fn single_value_is_flagged() {
        let s = summary_of(&[4.0]).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.std, 0.0);
        assert!(!summary_of(&[4.0, 5.0]).unwrap().degenerate);
    }

    #[test]
    fn json_field_names() {
        let v = serde_json::to_value(summary_of(&[1.0, 2.0]).unwrap()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["count", "excess_kurtosis", "max", "mean", "median", "min", "skewness", "std", "unique_count"]
        );
    }

    /// Straightforward two-pass oracle on the unsorted input.
    fn naive(x: &[f64]) -> (f64, f64, f64, f64) {
        let n = x.len() as f64;
        let mut mean = 0.0;
        for v in x {
            mean += v;
        }
        mean /= n;
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        let mut m4 = 0.0;
        for v in x {
            let d = v - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        let pop = m2 / n;
        (mean, (m2 / (n - 1.0)).sqrt(), m3 / n / pop.powf(1.5), m4 / n / (pop * pop) - 3.0)
    }

    #[test]
    fn agrees_with_two_pass_oracle_on_large_input() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for &n in &[10usize, 1000, 100_000] {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..150.0)).collect();
            let s = summary_of(&x).unwrap();
            let (m, sd, sk, ku) = naive(&x);
            assert!(close(s.mean, m, 1e-12) && close(s.std, sd, 1e-12));
            assert!(close(s.skewness, sk, 1e-10) && close(s.excess_kurtosis, ku, 1e-10));
        }
    }

    proptest! {
        #[test]
        fn invariants(x in prop::collection::vec(-1e3f64..1e3, 2..60), shift in -1e3f64..1e3, scale in 0.01f64..100.0) {
            let s = summary_of(&x).unwrap();
            prop_assert!(s.min <= s.median && s.median <= s.max);
            prop_assert!(s.unique_count <= s.count);
            prop_assert_eq!(s.std == 0.0, x.iter().all(|v| *v == x[0]));

            let t = summary_of(&x.iter().map(|v| v + shift).collect::<Vec<_>>()).unwrap();
            let span = s.max.abs().max(s.min.abs()) + shift.abs();
            prop_assert!((t.mean - (s.mean + shift)).abs() <= 1e-10 * span);
            prop_assert!((t.median - (s.median + shift)).abs() <= 1e-10 * span);
            prop_assert!((t.std - s.std).abs() <= 1e-10 * span);
            if s.std > 1e-3 {
                prop_assert!((t.skewness - s.skewness).abs() <= 1e-8);
                prop_assert!((t.excess_kurtosis - s.excess_kurtosis).abs() <= 1e-8);
            }

            let a = summary_of(&x.iter().map(|v| v * scale).collect::<Vec<_>>()).unwrap();
            prop_assert!((a.mean - s.mean * scale).abs() <= 1e-10 * span * scale);
            prop_assert!((a.std - s.std * scale).abs() <= 1e-10 * span * scale);
            prop_assert!((a.max - s.max * scale).abs() <= 1e-10 * span * scale);
            if s.std > 1e-3 {
                prop_assert!((a.skewness - s.skewness).abs() <= 1e-10);
                prop_assert!((a.excess_kurtosis - s.excess_kurtosis).abs() <= 1e-10);
            }

            let mut rev = x.clone();
            rev.reverse();
            prop_assert_eq!(summary_of(&rev).unwrap(), s);
        }
    }
}
