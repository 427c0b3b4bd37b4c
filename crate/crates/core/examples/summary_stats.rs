//! Descriptive statistics for a column with missing entries.
//!
//!     cargo run --example summary_stats

use curvefit::stats::summary_statistics;

fn main() -> curvefit::error::Result<()> {
    let values = [Some(2.0), Some(4.0), None, Some(4.0), Some(4.0), Some(5.0), Some(5.0), None, Some(7.0), Some(9.0)];
    let s = summary_statistics(&values)?;
    println!("{}", serde_json::to_string_pretty(&s).unwrap());
    Ok(())
}
