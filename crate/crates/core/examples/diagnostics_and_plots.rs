//! Fit a model, score it, and write every chart kind as SVG.
//!
//!     cargo run --example diagnostics_and_plots [output-dir]

use std::path::PathBuf;

use curvefit::dataset::Dataset;
use curvefit::local::{fit, LocalConfig};
use curvefit::metrics::{model_analysis, residual_diagnostics};
use curvefit::models::ModelSpec;
use curvefit::plot::{emit_plot, PlotKind, PlotRequest};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> curvefit::error::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("curvefit-plots"));
    std::fs::create_dir_all(&out_dir)?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.4).unwrap();
    let x: Vec<f64> = (1..=80).map(|i| i as f64 * 0.125).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v.ln() + 1.0 + noise.sample(&mut rng)).collect();
    let d = Dataset::from_xy(&x, &y)?;

    let spec = ModelSpec::by_name("logarithmic")?;
    let r = fit(&spec, &d, &spec.default_init(&d), &LocalConfig::default())?;
    let fitted = spec.evaluate(&r.theta_hat, &x)?;
    let m = model_analysis(&y, &fitted)?;
    println!("theta {:.4?}  R2 {:.4}  rmse {:.4}", &r.theta_hat[..], m.r_squared.unwrap(), m.rmse);

    let diag = residual_diagnostics(&y, &fitted)?;
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let plots: [(PlotKind, Vec<String>, Vec<&[f64]>); 6] = [
        (PlotKind::Scatter, names(&["x", "y"]), vec![&x, &y]),
        (PlotKind::Line, names(&["x", "fitted"]), vec![&x, &fitted]),
        (PlotKind::Histogram, names(&["residual"]), vec![&diag.residuals]),
        (PlotKind::Box, names(&["y"]), vec![&y]),
        (PlotKind::Qq, names(&["residual"]), vec![&diag.residuals]),
        (PlotKind::ResidualsVsFitted, vec![], vec![&diag.fitted, &diag.residuals]),
    ];
    for (kind, columns, series) in plots {
        let output_path = out_dir.join(format!("{}.svg", kind.name()));
        emit_plot(&PlotRequest { kind, columns, output_path: output_path.clone() }, &series)?;
        println!("wrote {}", output_path.display());
    }
    Ok(())
}
