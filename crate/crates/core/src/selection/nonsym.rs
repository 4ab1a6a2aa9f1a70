//! Non-symmetric matrices via the symmetrization `B = AᵀD + DA`.

use nalgebra::DMatrix;

use super::{greedy_q, GreedyQConfig, SelectionResult};
use crate::error::{Error, Result};
use crate::linalg::{min_real_eigenvalue, square_submatrix, symmetrize_lyapunov};

/// Selects a removed set so that every eigenvalue of `A(kept)` has real part
/// above `β`.
///
/// Runs [`greedy_q`] on `(A − βI)ᵀD + D(A − βI) = B − 2βD` at threshold 0,
/// then checks `min Re λ(A(kept)) > β` with a general eigensolve.
pub fn greedy_nonsymmetric(
    a: &DMatrix<f64>,
    d: &[f64],
    beta: f64,
    cfg: &GreedyQConfig,
) -> Result<SelectionResult> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite, got {beta}"
        )));
    }
    let mut b = symmetrize_lyapunov(a, d)?.into_dmatrix();
    for (i, &di) in d.iter().enumerate() {
        b[(i, i)] -= 2.0 * beta * di;
    }
    let b = crate::linalg::SymMatrix::from_dmatrix(b)?;
    let mut res = greedy_q(&b, 0.0, cfg)?;
    if !res.success() {
        return Err(Error::CertificateFailed(format!(
            "symmetrized matrix not certified after removing {}",
            res.removed
        )));
    }
    let kept = square_submatrix(a, &res.removed.complement())?;
    let min_re = min_real_eigenvalue(&kept)?;
    if !(min_re > beta) {
        return Err(Error::CertificateFailed(format!(
            "min real part {min_re:e} of kept block is not above {beta}"
        )));
    }
    res.final_lambda_min = min_re;
    res.beta = beta;
    Ok(res)
}
