//! Cardinality sweep on the log-determinant sufficient condition.

use super::{certify, Method, Outcome, SelectionResult, Step};
use crate::error::{Error, Result};
use crate::linalg::{add_alpha_diag, eigenvalues_sym, log_det, IndexSet, SymMatrix};

pub const DEFAULT_LOGDET_ZETA: f64 = 1e-8;

/// `((n−1)/tr A)^{n−1}·det A`, a lower bound on `λ_min` of a PD matrix.
pub fn merikoski_bound(a: &SymMatrix) -> Result<f64> {
    let n = a.dim();
    let ld = log_det(a)?;
    if n == 1 {
        return Ok(ld.exp());
    }
    let k = (n - 1) as f64;
    Ok((k * (k / a.trace()).ln() + ld).exp())
}

fn shifted_spectrum(l: &SymMatrix, removed: &IndexSet, alpha: f64, zeta: f64) -> Result<Vec<f64>> {
    let mut m = add_alpha_diag(l, removed, alpha);
    m = m.shifted(-zeta);
    eigenvalues_sym(&m)
}

/// `log det(M) − (n−1)·ln tr(M) − ln ζ + (n−1)·ln(n−1)` with
/// `M = L + αD(S) + ζI`. Positive means the condition holds; `−∞` when `M`
/// is not PD or its trace is not positive.
pub fn logdet_condition_margin(
    l: &SymMatrix,
    removed: &IndexSet,
    alpha: f64,
    zeta: f64,
) -> Result<f64> {
    let eigs = shifted_spectrum(l, removed, alpha, zeta)?;
    Ok(margin_from_eigenvalues(&eigs, zeta))
}

fn margin_from_eigenvalues(eigs: &[f64], zeta: f64) -> f64 {
    let ld = logdet_or_neg_inf(eigs);
    let tr: f64 = eigs.iter().sum();
    if ld == f64::NEG_INFINITY || !(tr > 0.0) {
        return f64::NEG_INFINITY;
    }
    let k = (eigs.len() - 1) as f64;
    let k_ln_k = if k > 0.0 { k * k.ln() } else { 0.0 };
    ld - k * tr.ln() - zeta.ln() + k_ln_k
}

fn logdet_or_neg_inf(eigs: &[f64]) -> f64 {
    if eigs.iter().any(|&l| !(l > 0.0)) {
        return f64::NEG_INFINITY;
    }
    eigs.iter().map(|l| l.ln()).sum()
}

/// Smallest `k` whose greedy log-det set satisfies the determinant condition.
///
/// The greedy sets are nested: step `k` adds the index maximizing
/// `(log det(L + αD(S) + ζI), λ_min)` over the remaining indices.
pub fn logdet_cardinality_sweep(l: &SymMatrix, alpha: f64, zeta: f64) -> Result<SelectionResult> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "zeta must be positive, got {zeta}"
        )));
    }
    let n = l.dim();
    if n == 0 {
        return Err(Error::EmptySubmatrix);
    }
    let mut removed = IndexSet::empty(n);
    let mut eigs = shifted_spectrum(l, &removed, alpha, zeta)?;
    let mut evals = 1;
    let mut steps = Vec::new();
    let mut satisfied = margin_from_eigenvalues(&eigs, zeta) > 0.0;

    while !satisfied && removed.len() + 1 < n {
        let mut best: Option<(usize, f64, f64, Vec<f64>)> = None;
        for v in removed.complement().iter() {
            let e = shifted_spectrum(l, &removed.with(v), alpha, zeta)?;
            evals += 1;
            let ld = logdet_or_neg_inf(&e);
            let lmin = *e.last().expect("nonempty");
            let better = match &best {
                None => true,
                Some((_, bld, blmin, _)) => ld > *bld || (ld == *bld && lmin > *blmin),
            };
            if better {
                best = Some((v, ld, lmin, e));
            }
        }
        let (v, ld, _, e) = best.expect("nonempty candidate set");
        removed = removed.with(v);
        steps.push(Step {
            index: v,
            value: ld,
        });
        eigs = e;
        satisfied = margin_from_eigenvalues(&eigs, zeta) > 0.0;
    }

    let (lam, ok) = certify(l, &removed, 0.0)?;
    let (outcome, diagnostic) = if satisfied {
        if ok {
            (Outcome::Certified, None)
        } else {
            (
                Outcome::Unsatisfiable,
                Some(format!(
                    "determinant condition held but lambda_min = {lam:e}"
                )),
            )
        }
    } else {
        (
            Outcome::Unsatisfiable,
            Some(format!(
                "determinant condition fails for every k (alpha = {alpha}, zeta = {zeta})"
            )),
        )
    };
    Ok(SelectionResult {
        removed,
        method: Method::Logdet,
        steps,
        final_lambda_min: lam,
        alpha_used: Some(alpha),
        beta: 0.0,
        bound_ratio: None,
        outcome,
        oracle_evals: evals,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, SignedGraph};

    #[test]
    fn merikoski_identity() {
        assert!((merikoski_bound(&SymMatrix::identity(2)).unwrap() - 0.5).abs() < 1e-15);
        assert!((merikoski_bound(&SymMatrix::from_diagonal(&[3.0])).unwrap() - 3.0).abs() < 1e-14);
        assert!(merikoski_bound(&SymMatrix::from_diagonal(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn identity_satisfies_at_k0() {
        // n = 3, M = (1+ζ)I: margin = 3 ln(1+ζ) − 2 ln(3+3ζ) − ln ζ + 2 ln 2.
        let zeta: f64 = 1e-3;
        let expected =
            3.0 * (1.0 + zeta).ln() - 2.0 * (3.0 + 3.0 * zeta).ln() - zeta.ln() + 2.0 * 2f64.ln();
        let got = logdet_condition_margin(&SymMatrix::identity(3), &IndexSet::empty(3), 1.0, zeta)
            .unwrap();
        assert!((got - expected).abs() < 1e-12);
        let r = logdet_cardinality_sweep(&SymMatrix::identity(3), 4.0, zeta).unwrap();
        assert!(r.removed.is_empty());
        assert!(r.success());
    }

    #[test]
    fn large_zeta_is_unsatisfiable_at_k0() {
        // The bound never exceeds λ_min(M) = 1 + ζ, so it cannot beat ζ = 10.
        let m = logdet_condition_margin(&SymMatrix::identity(3), &IndexSet::empty(3), 1.0, 10.0)
            .unwrap();
        assert!(m < 0.0);
    }

    #[test]
    fn negative_edge_graph_gets_certified() {
        let g = SignedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, -1.0)]).unwrap();
        let l = laplacian(&g);
        let r = logdet_cardinality_sweep(&l, 10.0, DEFAULT_LOGDET_ZETA).unwrap();
        assert!(r.success(), "{r:?}");
        assert!(r.final_lambda_min >= -1e-9);
    }

    #[test]
    fn infeasible_instance_reports_unsatisfiable() {
        let l = SymMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let r = logdet_cardinality_sweep(&l, 4.0, DEFAULT_LOGDET_ZETA).unwrap();
        assert_eq!(r.outcome, Outcome::Unsatisfiable);
        assert!(r.diagnostic.is_some());
    }

    #[test]
    fn rejects_bad_parameters() {
        let a = SymMatrix::identity(2);
        assert!(logdet_cardinality_sweep(&a, 0.0, 1e-3).is_err());
        assert!(logdet_cardinality_sweep(&a, 1.0, 0.0).is_err());
    }
}
