//! Least-squares helpers shared by the polynomial and AR fits.

use nalgebra::{DMatrix, DVector};

/// Residual sums of squares of the nested fits on the first `j` columns of
/// `design`, for `j = 0..=p`.
///
/// One Householder QR covers every prefix: with `q = Qᵀy`, the residual of
/// the `j`-column fit is `Σ_{i≥j} q_i²`. Returns the 1-based column count
/// at which the design becomes rank deficient.
pub(crate) fn nested_rss(design: DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<f64>, usize> {
    let (n, p) = design.shape();
    if p > n {
        return Err(n + 1);
    }
    let col_norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    let qr = design.qr();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)].abs() <= 1e-12 * col_norms[j].max(f64::MIN_POSITIVE) {
            return Err(j + 1);
        }
    }
    let mut q = y.clone();
    qr.q_tr_mul(&mut q);
    // suffix sums of squares, accumulated from the end for accuracy
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + q[i] * q[i];
    }
    Ok(tail[..=p].to_vec())
}

/// Least-squares coefficients for a full-rank design.
pub(crate) fn solve(design: DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>, usize> {
    let (n, p) = design.shape();
    if p > n {
        return Err(n + 1);
    }
    let col_norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    let qr = design.qr();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)].abs() <= 1e-12 * col_norms[j].max(f64::MIN_POSITIVE) {
            return Err(j + 1);
        }
    }
    let mut q = y.clone();
    qr.q_tr_mul(&mut q);
    let rhs = q.rows(0, p).into_owned();
    r.solve_upper_triangular(&rhs).ok_or(p)
}
