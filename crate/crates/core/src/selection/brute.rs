//! Exhaustive minimum removed set.

use itertools::Itertools;

use super::{certify, Method, Outcome, SelectionResult, Step};
use crate::error::{Error, Result};
use crate::linalg::{IndexSet, SymMatrix};

pub const BRUTE_FORCE_MAX_N: usize = 16;

/// Smallest removed set with `λ_min(A(kept)) ≥ β − ε_pd`, first in
/// lexicographic order among those of minimum size. When no set with at least
/// one kept index works, returns `{0, …, n−2}` flagged as grounded to a
/// singleton.
pub fn brute_force_min_set(a: &SymMatrix, beta: f64) -> Result<SelectionResult> {
    let n = a.dim();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    if n == 0 {
        return Err(Error::EmptySubmatrix);
    }
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite, got {beta}"
        )));
    }
    let mut evals = 0;
    for size in 0..n {
        for combo in (0..n).combinations(size) {
            let removed = IndexSet::new(combo, n)?;
            let (lam, ok) = certify(a, &removed, beta)?;
            evals += 1;
            if ok {
                return Ok(result(removed, lam, Outcome::Certified, evals, beta));
            }
        }
    }
    let removed = IndexSet::new((0..n - 1).collect(), n)?;
    let (lam, _) = certify(a, &removed, beta)?;
    Ok(result(
        removed,
        lam,
        Outcome::GroundedToSingleton,
        evals,
        beta,
    ))
}

fn result(
    removed: IndexSet,
    lam: f64,
    outcome: Outcome,
    evals: usize,
    beta: f64,
) -> SelectionResult {
    let steps = removed
        .iter()
        .map(|index| Step {
            index,
            value: f64::NAN,
        })
        .collect();
    SelectionResult {
        removed,
        method: Method::BruteForce,
        steps,
        final_lambda_min: lam,
        alpha_used: None,
        beta,
        bound_ratio: None,
        outcome,
        oracle_evals: evals,
        diagnostic: None,
    }
}
