//! Bounded global search by differential evolution (DE/rand/1/bin) with
//! independent restarts, each polished by Levenberg-Marquardt.
//!
//! Restart `i` draws from a ChaCha stream keyed by `(seed, i)` only, so the
//! result does not depend on how many threads run the restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::local::{fit_xy, FitResult, LocalConfig, Problem};
use crate::models::{ModelSpec, ParamVector};

/// Finite stand-in for an unbounded parameter.
pub const DEFAULT_BOUND: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeConfig {
    /// Per-parameter `(lo, hi)`. Empty means `(−1e6, 1e6)` for every parameter.
    pub bounds: Vec<(f64, f64)>,
    /// Generations per restart.
    pub max_iter: usize,
    pub restarts: usize,
    /// Differential weight `F`.
    pub mutation_rate: f64,
    /// Worker threads for restarts; `-1` uses all available parallelism.
    pub n_jobs: i64,
    pub seed: u64,
    /// Population size; `None` means `max(15, 10·param_count)`.
    pub population: Option<usize>,
    /// Binomial crossover probability.
    pub crossover: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            bounds: Vec::new(),
            max_iter: 100,
            restarts: 5,
            mutation_rate: 0.05,
            n_jobs: -1,
            seed: 0,
            population: None,
            crossover: 0.7,
        }
    }
}

impl OptimizeConfig {
    /// Bounds resolved against the parameter count, validated.
    pub fn resolved_bounds(&self, param_count: usize) -> Result<Vec<(f64, f64)>> {
        let bounds = if self.bounds.is_empty() {
            vec![(-DEFAULT_BOUND, DEFAULT_BOUND); param_count]
        } else {
            self.bounds.clone()
        };
        if bounds.len() != param_count {
            return Err(Error::InvalidBounds(format!(
                "{} bound pairs given for {param_count} parameters",
                bounds.len()
            )));
        }
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBounds(format!(
                    "parameter {j}: need finite lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(bounds)
    }

    pub fn population_size(&self, param_count: usize) -> usize {
        self.population.unwrap_or_else(|| (10 * param_count).max(15))
    }

    fn validate(&self, param_count: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        if !(self.mutation_rate > 0.0 && self.mutation_rate <= 2.0) {
            return bad("mutation_rate must lie in (0, 2]");
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return bad("crossover must lie in [0, 1]");
        }
        if self.n_jobs == 0 || self.n_jobs < -1 {
            return bad("n_jobs must be -1 or positive");
        }
        if self.population_size(param_count) < 4 {
            return bad("population must be at least 4");
        }
        Ok(())
    }
}

/// Outcome of one restart, before and after polishing.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub index: usize,
    pub de_best: Vec<f64>,
    pub de_loss: f64,
    pub generations: usize,
    pub polished: FitResult,
}

/// Runs `cfg.restarts` DE searches and returns the best polished result.
pub fn global_fit(spec: &ModelSpec, d: &Dataset, cfg: &OptimizeConfig) -> Result<FitResult> {
    let outcomes = global_restarts(spec, d, cfg)?;
    let best = outcomes
        .into_iter()
        .reduce(|best, o| if o.polished.loss < best.polished.loss { o } else { best })
        .expect("at least one restart");
    Ok(best.polished)
}

/// All restart outcomes, ordered by restart index.
pub fn global_restarts(
    spec: &ModelSpec,
    d: &Dataset,
    cfg: &OptimizeConfig,
) -> Result<Vec<RestartOutcome>> {
    let (x, y) = d.xy()?;
    let k = spec.param_count();
    cfg.validate(k)?;
    let bounds = cfg.resolved_bounds(k)?;
    let run = |i: usize| run_restart(spec, &x, &y, &bounds, cfg, i);

    let outcomes: Vec<Result<RestartOutcome>> = if cfg.n_jobs == 1 {
        (0..cfg.restarts).map(run).collect()
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if cfg.n_jobs > 0 {
            builder = builder.num_threads(cfg.n_jobs as usize);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| (0..cfg.restarts).into_par_iter().map(run).collect())
    };
    outcomes.into_iter().collect()
}

fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn run_restart(
    spec: &ModelSpec,
    x: &[f64],
    y: &[f64],
    bounds: &[(f64, f64)],
    cfg: &OptimizeConfig,
    index: usize,
) -> Result<RestartOutcome> {
    let problem = Problem { spec, x, y };
    let k = bounds.len();
    let np = cfg.population_size(k);
    let mut rng = restart_rng(cfg.seed, index);

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect();
    let mut cost: Vec<f64> = pop.iter().map(|m| problem.loss(m)).collect();
    if cost.iter().all(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!(
            "restart {index}: every initial member is outside the model domain"
        )));
    }

    let mut trial = vec![0.0; k];
    for gen in 0..cfg.max_iter {
        let mut any_finite = false;
        for target in 0..np {
            let [r1, r2, r3] = distinct_others(&mut rng, np, target);
            let forced = rng.random_range(0..k);
            for j in 0..k {
                trial[j] = if j == forced || rng.random::<f64>() < cfg.crossover {
                    let v = pop[r1][j] + cfg.mutation_rate * (pop[r2][j] - pop[r3][j]);
                    v.clamp(bounds[j].0, bounds[j].1)
                } else {
                    pop[target][j]
                };
            }
            let c = problem.loss(&trial);
            any_finite |= c.is_finite();
            if c <= cost[target] {
                pop[target].copy_from_slice(&trial);
                cost[target] = c;
            }
        }
        if !any_finite {
            return Err(Error::NonFinite(format!(
                "restart {index}: every trial in generation {gen} is non-finite"
            )));
        }
    }

    let best = (0..np).fold(0, |b, i| if cost[i] < cost[b] { i } else { b });
    let de_best = pop[best].clone();
    let de_loss = cost[best];

    let unpolished = || FitResult {
        theta_hat: ParamVector::new(de_best.clone()).expect("members are clamped to finite bounds"),
        loss: de_loss,
        iterations: cfg.max_iter,
        converged: false,
        method: "differential_evolution".into(),
    };
    let polished = match fit_xy(spec, x, y, &de_best, &LocalConfig::default()) {
        Ok(r) => {
            let clamped: Vec<f64> = r
                .theta_hat
                .iter()
                .zip(bounds)
                .map(|(v, &(lo, hi))| v.clamp(lo, hi))
                .collect();
            let loss = problem.loss(&clamped);
            if loss <= de_loss {
                FitResult {
                    theta_hat: ParamVector::new(clamped)?,
                    loss,
                    iterations: cfg.max_iter + r.iterations,
                    converged: r.converged,
                    method: "differential_evolution+levenberg_marquardt".into(),
                }
            } else {
                unpolished()
            }
        }
        Err(_) => unpolished(),
    };

    Ok(RestartOutcome {
        index,
        de_best,
        de_loss,
        generations: cfg.max_iter,
        polished,
    })
}

/// Three distinct population indices, all different from `target`.
fn distinct_others(rng: &mut ChaCha8Rng, np: usize, target: usize) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    for slot in 0..3 {
        loop {
            let c = rng.random_range(0..np);
            if c != target && !picked[..slot].contains(&c) {
                picked[slot] = c;
                break;
            }
        }
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::{fit, rss};
    use crate::models::Family;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn linear_data() -> Dataset {
        let x = grid(20, 0.0, 5.0);
        let y: Vec<f64> = x.iter().map(|x| 3.0 * x + 4.0).collect();
        Dataset::from_xy(&x, &y).unwrap()
    }

    #[test]
    fn minimal_configuration_is_valid() {
        let spec = ModelSpec::builtin(Family::Linear);
        let cfg = OptimizeConfig {
            restarts: 1,
            population: Some(4),
            max_iter: 1,
            bounds: vec![(-10.0, 10.0), (-10.0, 10.0)],
            ..OptimizeConfig::default()
        };
        let r = global_fit(&spec, &linear_data(), &cfg).unwrap();
        assert!(r.loss.is_finite());
        assert!(r.theta_hat.iter().all(|v| (-10.0..=10.0).contains(v)));
    }

    #[test]
    fn config_validation() {
        let spec = ModelSpec::builtin(Family::Linear);
        let d = linear_data();
        let bad_bounds = OptimizeConfig { bounds: vec![(1.0, 1.0), (0.0, 1.0)], ..Default::default() };
        assert!(matches!(global_fit(&spec, &d, &bad_bounds), Err(Error::InvalidBounds(_))));
        let wrong_len = OptimizeConfig { bounds: vec![(0.0, 1.0)], ..Default::default() };
        assert!(matches!(global_fit(&spec, &d, &wrong_len), Err(Error::InvalidBounds(_))));
        for cfg in [
            OptimizeConfig { population: Some(3), ..Default::default() },
            OptimizeConfig { mutation_rate: 0.0, ..Default::default() },
            OptimizeConfig { mutation_rate: 2.5, ..Default::default() },
            OptimizeConfig { n_jobs: 0, ..Default::default() },
            OptimizeConfig { restarts: 0, ..Default::default() },
            OptimizeConfig { max_iter: 0, ..Default::default() },
        ] {
            assert!(matches!(global_fit(&spec, &d, &cfg), Err(Error::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn defaults_match_the_documented_signature() {
        let c = OptimizeConfig::default();
        assert_eq!((c.max_iter, c.restarts, c.mutation_rate, c.n_jobs), (100, 5, 0.05, -1));
        assert_eq!(c.population_size(2), 20);
        assert_eq!(c.population_size(1), 15);
        assert_eq!(c.resolved_bounds(2).unwrap(), vec![(-1e6, 1e6); 2]);
    }

    #[test]
    fn identical_across_thread_counts() {
        let spec = ModelSpec::builtin(Family::Exponential);
        let x = grid(100, -5.0, 5.0);
        let y: Vec<f64> = x.iter().map(|x| 5.0 * (0.7 * x).exp() + 0.3 * (7.0 * x).sin()).collect();
        let d = Dataset::from_xy(&x, &y).unwrap();
        let base = OptimizeConfig { bounds: vec![(0.0, 10.0), (0.0, 2.0)], seed: 11, ..Default::default() };
        let one = global_restarts(&spec, &d, &OptimizeConfig { n_jobs: 1, ..base.clone() }).unwrap();
        let four = global_restarts(&spec, &d, &OptimizeConfig { n_jobs: 4, ..base.clone() }).unwrap();
        let all = global_restarts(&spec, &d, &base).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, all);
        // Different restarts explore different streams.
        assert_ne!(one[0].de_best, one[1].de_best);
    }

    #[test]
    fn polished_loss_never_exceeds_de_loss() {
        let spec = ModelSpec::builtin(Family::Gaussian);
        let x = grid(80, -4.0, 4.0);
        let y: Vec<f64> = x.iter().map(|x| 3.0 * (-(x - 1.0f64).powi(2) / 0.5).exp()).collect();
        let d = Dataset::from_xy(&x, &y).unwrap();
        let cfg = OptimizeConfig {
            bounds: vec![(-5.0, 5.0), (-4.0, 4.0), (0.05, 3.0)],
            max_iter: 30,
            ..Default::default()
        };
        let outcomes = global_restarts(&spec, &d, &cfg).unwrap();
        let best = global_fit(&spec, &d, &cfg).unwrap();
        let min_de = outcomes.iter().map(|o| o.de_loss).fold(f64::INFINITY, f64::min);
        assert!(best.loss <= min_de);
        for o in &outcomes {
            assert!(o.polished.loss <= o.de_loss);
            for (v, (lo, hi)) in o.polished.theta_hat.iter().zip(&cfg.bounds) {
                assert!(lo <= v && v <= hi);
            }
        }
        assert!((best.loss - rss(&spec, &best.theta_hat, &d).unwrap()).abs() <= 1e-12 * best.loss.max(1e-300));
    }

    #[test]
    fn escapes_a_local_basin_that_traps_the_local_fit() {
        // Two bumps; the default init locks onto the wide, low one while the
        // data are generated by the narrow tall bump only.
        let spec = ModelSpec::builtin(Family::Gaussian);
        let x = grid(121, -6.0, 6.0);
        let y: Vec<f64> = x.iter().map(|x| 4.0 * (-(x - 3.0f64).powi(2) / (2.0 * 0.3 * 0.3)).exp()).collect();
        let d = Dataset::from_xy(&x, &y).unwrap();
        let bad_init = [1.0, -3.0, 0.5];
        let local = fit(&spec, &d, &bad_init, &LocalConfig::default()).unwrap();
        let from_default = fit(&spec, &d, &spec.default_init(&d), &LocalConfig::default()).unwrap();
        let cfg = OptimizeConfig {
            bounds: vec![(0.0, 6.0), (-6.0, 6.0), (0.1, 3.0)],
            mutation_rate: 0.5,
            ..Default::default()
        };
        let global = global_fit(&spec, &d, &cfg).unwrap();
        assert!(local.loss > 1.0, "the bad start should stay trapped: {local:?}");
        assert!(global.loss <= from_default.loss);
        assert!(global.loss < 1e-12, "{global:?}");

        // Dense scan of the bound box as an independent reference.
        let mut scan_min = f64::INFINITY;
        for ia in 0..=24 {
            for im in 0..=120 {
                for is in 0..=29 {
                    let t = [ia as f64 * 0.25, -6.0 + im as f64 * 0.1, 0.1 + is as f64 * 0.1];
                    scan_min = scan_min.min(rss(&spec, &t, &d).unwrap());
                }
            }
        }
        assert!(global.loss <= scan_min);
    }

    #[test]
    fn tighter_bounds_do_not_hurt_on_clean_data() {
        let spec = ModelSpec::builtin(Family::Exponential);
        let x = grid(50, -2.0, 2.0);
        let y: Vec<f64> = x.iter().map(|x| 5.0 * (0.7 * x).exp()).collect();
        let d = Dataset::from_xy(&x, &y).unwrap();
        let wide = OptimizeConfig { bounds: vec![(0.0, 10.0), (0.0, 2.0)], ..Default::default() };
        let tight = OptimizeConfig { bounds: vec![(4.9, 5.1), (0.69, 0.71)], ..Default::default() };
        let lw = global_fit(&spec, &d, &wide).unwrap().loss;
        let lt = global_fit(&spec, &d, &tight).unwrap().loss;
        assert!(lt <= lw.max(1e-20), "{lt} vs {lw}");
    }
}
