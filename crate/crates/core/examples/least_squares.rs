//! Minimum-norm least squares on full-rank and rank-deficient systems.
//!
//!     cargo run --example least_squares

use curvefit::linalg::lstsq;
use nalgebra::{DMatrix, DVector};

fn main() {
    let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
    let b = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
    println!("full rank:  {:?}", lstsq(&a, &b).as_slice());

    // Second column duplicates the first: infinitely many minimizers, the
    // returned one has the smallest norm.
    let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    let b = DVector::from_vec(vec![2.0, 4.0, 6.0]);
    println!("rank one:   {:?}", lstsq(&a, &b).as_slice());
}
