//! Savitzky-Golay weights and smoothing of a noisy sine.
//!
//!     cargo run --example smoothing

use curvefit::smooth::{savitzky_golay, sg_coefficients, SGConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> curvefit::error::Result<()> {
    for (w, d) in [(2, 2), (3, 2), (3, 4)] {
        let c = sg_coefficients(&SGConfig::new(w, d)?)?.coefficients;
        println!("w={w} d={d}: {:.5?}", c);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.2).unwrap();
    let x: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
    let clean: Vec<f64> = x.iter().map(|v| v.sin()).collect();
    let noisy: Vec<f64> = clean.iter().map(|v| v + noise.sample(&mut rng)).collect();

    let rms = |a: &[f64]| (a.iter().zip(&clean).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
    println!("raw error rms {:.4}", rms(&noisy));
    for w in [2, 5, 10] {
        let s = savitzky_golay(&noisy, &SGConfig::new(w, 2)?)?;
        println!("w={w:>2} d=2 error rms {:.4}", rms(&s));
    }
    Ok(())
}
