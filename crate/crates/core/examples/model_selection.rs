//! Rank the builtin families on four noise-free test functions.
//!
//!     cargo run --example model_selection

use curvefit::models::Family;
use curvefit::regress::{select_model, Candidate};

fn main() -> curvefit::error::Result<()> {
    let x: Vec<f64> = (0..50).map(|i| 1.0 + 9.0 * i as f64 / 49.0).collect();
    let candidates: Vec<Candidate> = Family::ALL.iter().map(|f| f.name().parse()).collect::<Result<_, _>>()?;
    let cases: [(&str, fn(f64) -> f64); 4] = [
        ("3x + 4", |x| 3.0 * x + 4.0),
        ("2x^2 - 5x + 3", |x| 2.0 * x * x - 5.0 * x + 3.0),
        ("5 sin x + 2 cos x", |x| 5.0 * x.sin() + 2.0 * x.cos()),
        ("1.5x^2 - 2x + 6", |x| 1.5 * x * x - 2.0 * x + 6.0),
    ];
    for (label, f) in cases {
        let y: Vec<f64> = x.iter().map(|v| f(*v)).collect();
        println!("{label}");
        for row in select_model(&x, &y, &candidates)?.iter().take(3) {
            println!(
                "  {:<12} R2={:<10.6} adjR2={:<10.6} rmse={:.3e}",
                row.model_name,
                row.r_squared.unwrap_or(f64::NAN),
                row.adj_r_squared.unwrap_or(f64::NAN),
                row.rmse.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
