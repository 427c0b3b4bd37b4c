//! Dense least-squares solves on top of nalgebra's pivoted QR.

use nalgebra::{DMatrix, DVector};

/// Minimum-norm solution of `min ‖a·x − b‖²`.
///
/// Uses a complete orthogonal decomposition: a column-pivoted QR of `a`
/// reveals the numerical rank `r`, and a second QR of the leading `r` rows
/// of `R` (transposed) picks the minimum-norm solution among all minimizers.
/// For full-column-rank `a` this is the ordinary QR least-squares solution.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    assert_eq!(m, b.len(), "lstsq: rows of a must match b");
    if n == 0 {
        return DVector::zeros(0);
    }
    let qr = a.clone().col_piv_qr();
    let r_full = qr.r();
    let k = r_full.nrows();
    let diag_max = (0..k).map(|i| r_full[(i, i)].abs()).fold(0.0, f64::max);
    if diag_max == 0.0 {
        return DVector::zeros(n);
    }
    let tol = diag_max * (m.max(n) as f64) * f64::EPSILON;
    let rank = (0..k).take_while(|&i| r_full[(i, i)].abs() > tol).count();

    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let c = qtb.rows(0, rank).into_owned();

    let mut z = if rank == n {
        let r = r_full.view((0, 0), (n, n)).into_owned();
        r.solve_upper_triangular(&c).expect("nonsingular by rank test")
    } else {
        // T = R[0..rank, :] is rank × n with full row rank; z = Tᵀ (T Tᵀ)⁻¹ c.
        let t_tr = r_full.rows(0, rank).transpose();
        let qr2 = t_tr.qr();
        let r2 = qr2.r();
        let w = r2
            .transpose()
            .solve_lower_triangular(&c)
            .expect("nonsingular by rank test");
        qr2.q() * w
    };
    qr.p().inv_permute_rows(&mut z);
    z
}
