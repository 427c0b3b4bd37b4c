//! Differential evolution on a two-peak signal where a local fit started
//! at the wrong peak gets stuck.
//!
//!     cargo run --example global_search

use curvefit::dataset::Dataset;
use curvefit::global::{global_restarts, OptimizeConfig};
use curvefit::local::{fit, LocalConfig};
use curvefit::models::ModelSpec;

fn main() -> curvefit::error::Result<()> {
    let x: Vec<f64> = (0..120).map(|i| i as f64 * 0.1).collect();
    // A tall peak at 8 and a smaller one at 2.
    let y: Vec<f64> = x
        .iter()
        .map(|v| 3.0 * (-(v - 8.0f64).powi(2) / 0.5).exp() + 1.0 * (-(v - 2.0f64).powi(2) / 0.5).exp())
        .collect();
    let d = Dataset::from_xy(&x, &y)?;
    let spec = ModelSpec::by_name("gaussian")?;

    let local = fit(&spec, &d, &[1.0, 2.0, 0.5], &LocalConfig::default())?;
    println!("local from m=2:  theta={:.4?} rss={:.4}", &local.theta_hat[..], local.loss);

    let cfg = OptimizeConfig {
        bounds: vec![(0.0, 5.0), (0.0, 12.0), (0.1, 3.0)],
        restarts: 4,
        seed: 1,
        ..OptimizeConfig::default()
    };
    for o in global_restarts(&spec, &d, &cfg)? {
        println!(
            "restart {}: DE loss {:.4} after {} generations, polished theta={:.4?} rss={:.6}",
            o.index, o.de_loss, o.generations, &o.polished.theta_hat[..], o.polished.loss
        );
    }
    Ok(())
}
