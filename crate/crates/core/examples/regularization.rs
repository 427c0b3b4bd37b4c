//! Ridge, lasso and elastic-net paths for a degree-6 polynomial basis fitted
//! to a noisy cubic.
//!
//!     cargo run --example regularization

use curvefit::regress::{design_matrix, lasso_fit, lasso_lambda_max, ridge_fit, BasisSpec, RegressionModel, Regularizer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> curvefit::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let x: Vec<f64> = (0..40).map(|i| -2.0 + 4.0 * i as f64 / 39.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 1.0 + v - 0.8 * v.powi(3) + noise.sample(&mut rng)).collect();
    let basis = BasisSpec::Polynomial(6);
    let phi = design_matrix(&basis, &x)?;

    println!("ridge");
    for lambda in [0.0, 0.1, 1.0, 10.0, 100.0] {
        let t = ridge_fit(&phi, &y, lambda)?;
        println!("  lambda={lambda:<6} {:+.3?}", &t[..]);
    }

    let lmax = lasso_lambda_max(&phi, &y, 1.0)?;
    println!("lasso (lambda_max = {lmax:.4})");
    for frac in [1.0, 0.5, 0.1, 0.01, 0.001] {
        let f = lasso_fit(&phi, &y, frac * lmax, 1.0)?;
        let nonzero = f.theta[1..].iter().filter(|v| **v != 0.0).count();
        println!("  {frac:<6}·max  {nonzero} slopes  {:+.3?}", &f.theta[..]);
    }

    let m = RegressionModel::fit(basis, &x, &y, Regularizer::ElasticNet { lambda: 0.05, alpha: 0.5 })?;
    println!("elastic net R2 {:.4}", m.training_metrics.r_squared.unwrap());
    Ok(())
}
