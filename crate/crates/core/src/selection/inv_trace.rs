//! Greedy grounding on `F(K) = trace(L₊(K)⁻¹)`.

use nalgebra::DMatrix;

use super::{certify, Method, Outcome, SelectionResult, Step};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_sym, submatrix, IndexSet, SymMatrix};

/// Splits a symmetric `A` as `A₊ − A₋`.
///
/// Off-diagonal entries go to `A₊` when negative and to `A₋` when positive,
/// each with its Laplacian diagonal. The residual row sum `r_i` lands on the
/// diagonal of `A₊` when positive and of `A₋` otherwise, so a signed Laplacian
/// splits into exactly `L(G₊)` and `L(G₋)`.
pub fn signed_parts(a: &SymMatrix) -> (SymMatrix, SymMatrix) {
    let n = a.dim();
    let mut plus = DMatrix::zeros(n, n);
    let mut minus = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            let x = a.get(i, j);
            row_sum += x;
            if i == j {
                continue;
            }
            if x < 0.0 {
                plus[(i, j)] = x;
                plus[(i, i)] -= x;
            } else if x > 0.0 {
                minus[(i, j)] = -x;
                minus[(i, i)] += x;
            }
        }
        if row_sum > 0.0 {
            plus[(i, i)] += row_sum;
        } else {
            minus[(i, i)] -= row_sum;
        }
    }
    (
        SymMatrix::from_symmetric_unchecked(plus),
        SymMatrix::from_symmetric_unchecked(minus),
    )
}

/// `trace(L₊(K)⁻¹)`; `+∞` when `L₊(K)` is singular, 0 for an empty `K`.
pub fn inverse_trace_objective(l_plus: &SymMatrix, kept: &IndexSet) -> Result<f64> {
    Ok(objective_and_nullity(l_plus, kept)?.0)
}

fn objective_and_nullity(l_plus: &SymMatrix, kept: &IndexSet) -> Result<(f64, usize)> {
    if kept.is_empty() {
        return Ok((0.0, 0));
    }
    let sub = submatrix(l_plus, kept)?;
    let tol = l_plus.pd_tolerance();
    let eigs = eigenvalues_sym(&sub)?;
    let nullity = eigs.iter().filter(|&&l| l <= tol).count();
    if nullity > 0 {
        return Ok((f64::INFINITY, nullity));
    }
    Ok((eigs.iter().map(|l| 1.0 / l).sum(), 0))
}

/// Removes indices greedily until `F(kept) ≤ 1/ζ` with
/// `ζ = λ_max(A₋) + rate_shift`, which forces `λ_min(A(kept)) ≥ rate_shift`.
///
/// Each step removes the index with the smallest `(nullity of A₊(kept∖v),
/// F(kept∖v), v)`.
pub fn greedy_inv_trace(a: &SymMatrix, rate_shift: f64) -> Result<SelectionResult> {
    if !(rate_shift >= 0.0) || !rate_shift.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rate_shift must be finite and nonnegative, got {rate_shift}"
        )));
    }
    let n = a.dim();
    if n == 0 {
        return Err(Error::EmptySubmatrix);
    }
    let (plus, minus) = signed_parts(a);
    let lmax_minus = eigenvalues_sym(&minus)?[0].max(0.0);
    let zeta = lmax_minus + rate_shift;
    let tol = a.pd_tolerance();

    let finish = |removed: IndexSet, steps: Vec<Step>, evals: usize, diagnostic: Option<String>| {
        let (lam, ok) = certify(a, &removed, rate_shift)?;
        let outcome = if ok {
            Outcome::Certified
        } else {
            Outcome::GroundedToSingleton
        };
        Ok(SelectionResult {
            removed,
            method: Method::InvTrace,
            steps,
            final_lambda_min: lam,
            alpha_used: None,
            beta: rate_shift,
            bound_ratio: None,
            outcome,
            oracle_evals: evals,
            diagnostic,
        })
    };

    // Nothing to do if the full matrix already passes.
    if zeta <= tol || certify(a, &IndexSet::empty(n), rate_shift)?.1 {
        return finish(IndexSet::empty(n), Vec::new(), 1, None);
    }

    let threshold = 1.0 / zeta;
    let mut removed = IndexSet::empty(n);
    let mut f = objective_and_nullity(&plus, &removed.complement())?.0;
    let mut evals = 1;
    let mut steps = Vec::new();
    while f > threshold && removed.len() + 1 < n {
        let kept = removed.complement();
        let mut best: Option<(usize, f64, usize)> = None;
        for v in kept.iter() {
            let (fv, null) = objective_and_nullity(&plus, &kept.without(v))?;
            evals += 1;
            let better = match best {
                None => true,
                Some((bn, bf, _)) => null < bn || (null == bn && fv < bf),
            };
            if better {
                best = Some((null, fv, v));
            }
        }
        let (_, fv, v) = best.expect("nonempty kept set");
        removed = removed.with(v);
        steps.push(Step {
            index: v,
            value: fv,
        });
        f = fv;
    }
    let diagnostic =
        (f > threshold).then(|| format!("F = {f:e} never reached 1/zeta = {threshold:e}"));
    finish(removed, steps, evals, diagnostic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, split_signed, SignedGraph};

    #[test]
    fn split_matches_graph_split_for_laplacians() {
        let g = SignedGraph::from_edges(4, [(0, 1, 1.0), (1, 2, -0.5), (2, 3, 2.0), (0, 3, -1.5)])
            .unwrap();
        let (gp, gm) = split_signed(&g);
        let (p, m) = signed_parts(&laplacian(&g));
        assert!((p.as_dmatrix() - laplacian(&gp).as_dmatrix()).abs().max() < 1e-12);
        // split_signed stores |w| for the negative part.
        assert!((m.as_dmatrix() - laplacian(&gm).as_dmatrix()).abs().max() < 1e-12);
    }

    #[test]
    fn split_reassembles() {
        let a = SymMatrix::from_rows(&[
            vec![2.0, -1.0, 0.5],
            vec![-1.0, -3.0, 0.0],
            vec![0.5, 0.0, 1.0],
        ])
        .unwrap();
        let (p, m) = signed_parts(&a);
        assert!(
            (p.as_dmatrix() - m.as_dmatrix() - a.as_dmatrix())
                .abs()
                .max()
                < 1e-15
        );
        assert!(crate::linalg::lambda_min(&m).unwrap() >= -1e-12);
    }

    #[test]
    fn objective_examples() {
        let a = SymMatrix::from_diagonal(&[2.0, 4.0]);
        let f = inverse_trace_objective(&a, &IndexSet::full(2)).unwrap();
        assert!((f - 0.75).abs() < 1e-14);
        let l = laplacian(&SignedGraph::from_edges(2, [(0, 1, 1.0)]).unwrap());
        assert_eq!(
            inverse_trace_objective(&l, &IndexSet::full(2)).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            inverse_trace_objective(&l, &IndexSet::empty(2)).unwrap(),
            0.0
        );
    }

    #[test]
    fn positive_graph_needs_nothing() {
        let g = SignedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let r = greedy_inv_trace(&laplacian(&g), 0.0).unwrap();
        assert!(r.removed.is_empty());
        assert!(r.success());
    }

    #[test]
    fn path_with_negative_edge_matches_brute_force() {
        // A -0.1 chord across P3 stays PSD (|w| < 1/R_eff = 0.5).
        let g = SignedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, -0.1)]).unwrap();
        let l = laplacian(&g);
        let r = greedy_inv_trace(&l, 0.0).unwrap();
        let opt = super::super::brute_force_min_set(&l, 0.0).unwrap();
        assert_eq!(opt.removed.len(), 0);
        assert_eq!(r.removed.len(), 0);

        // A -1 chord forces two removals.
        let g = SignedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, -1.0)]).unwrap();
        let l = laplacian(&g);
        let r = greedy_inv_trace(&l, 0.0).unwrap();
        let opt = super::super::brute_force_min_set(&l, 0.0).unwrap();
        assert_eq!(opt.removed.members(), &[0, 1]);
        assert!(r.success());
        assert_eq!(r.removed.len(), 2);
    }

    #[test]
    fn rate_shift_is_respected() {
        let g = SignedGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let l = laplacian(&g);
        let r = greedy_inv_trace(&l, 0.3).unwrap();
        assert!(r.success());
        assert!(r.final_lambda_min >= 0.3 - 1e-9);
    }

    #[test]
    fn rejects_negative_shift() {
        assert!(greedy_inv_trace(&SymMatrix::identity(2), -1.0).is_err());
    }
}
