//! Recover y = 5·e^{0.7x} from noisy samples at three noise levels.
//!
//!     cargo run --example fit_exponential

use curvefit::dataset::Dataset;
use curvefit::local::{fit, LocalConfig};
use curvefit::models::ModelSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> curvefit::error::Result<()> {
    let spec = ModelSpec::by_name("exponential")?;
    let x: Vec<f64> = (0..200).map(|i| -5.0 + 10.0 * i as f64 / 199.0).collect();

    println!("{:>6} {:>10} {:>10} {:>12} {:>5}", "sigma", "a", "b", "rss", "iter");
    for sigma in [0.01, 0.1, 1.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, sigma).unwrap();
        let y: Vec<f64> = x.iter().map(|v| 5.0 * (0.7 * v).exp() + noise.sample(&mut rng)).collect();
        let d = Dataset::from_xy(&x, &y)?;

        let init = spec.default_init(&d);
        let r = fit(&spec, &d, &init, &LocalConfig::default())?;
        println!(
            "{sigma:>6} {:>10.6} {:>10.6} {:>12.4} {:>5}",
            r.theta_hat[0], r.theta_hat[1], r.loss, r.iterations
        );
    }
    Ok(())
}
