//! A user-supplied model with a finite-difference Jacobian.
//!
//!     cargo run --example custom_model

use curvefit::dataset::Dataset;
use curvefit::local::{fit, LocalConfig, LocalMethod};
use curvefit::models::{JacobianKind, ModelSpec};

fn main() -> curvefit::error::Result<()> {
    // Logistic growth: K / (1 + e^{-r(x - x0)}).
    let spec = ModelSpec::custom("logistic", 3, |t, x| t[0] / (1.0 + (-t[1] * (x - t[2])).exp()));
    assert_eq!(spec.jacobian_kind(), JacobianKind::FiniteDifference);

    let x: Vec<f64> = (0..60).map(|i| i as f64 * 0.25).collect();
    let y = spec.evaluate(&[10.0, 1.3, 7.0], &x)?;
    let d = Dataset::from_xy(&x, &y)?;

    for method in [LocalMethod::LevenbergMarquardt, LocalMethod::NelderMead] {
        let cfg = LocalConfig { max_iter: 2000, ..LocalConfig::with_method(method) };
        let r = fit(&spec, &d, &[8.0, 1.0, 6.0], &cfg)?;
        println!("{:<20} {:.6?} rss={:.2e} iter={}", r.method, &r.theta_hat[..], r.loss, r.iterations);
    }
    Ok(())
}
