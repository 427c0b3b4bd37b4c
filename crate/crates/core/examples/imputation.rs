//! Every imputation strategy on the same gappy series.
//!
//!     cargo run --example imputation

use curvefit::dataset::Dataset;
use curvefit::impute::impute;

fn main() -> curvefit::error::Result<()> {
    let csv = "x,y\n0,\n1,2.1\n2,\n3,6.2\n4,7.9\n5,NaN\n6,12.1\n7,\n";
    let d = Dataset::read_csv(csv.as_bytes(), "x", "y")?;
    println!("input  {:?}", d.digest());

    for s in ["drop", "mean", "median", "linear", "ffill", "bfill", "model:linear"] {
        let out = impute(&d, &s.parse()?)?;
        let y: Vec<String> = out.y().iter().map(|v| format!("{:.2}", v.unwrap())).collect();
        println!("{s:>12}: {}", y.join(" "));
    }
    Ok(())
}
