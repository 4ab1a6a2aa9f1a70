//! Heuristic baselines: largest diagonal first, and uniformly random order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{certify, Method, Outcome, SelectionResult, Step};
use crate::error::{Error, Result};
use crate::linalg::{IndexSet, SymMatrix};

/// Removes along `next` until the kept block passes or one index remains.
fn remove_until_certified(
    a: &SymMatrix,
    beta: f64,
    method: Method,
    mut next: impl FnMut(&IndexSet) -> usize,
) -> Result<SelectionResult> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite, got {beta}"
        )));
    }
    let n = a.dim();
    if n == 0 {
        return Err(Error::EmptySubmatrix);
    }
    let mut removed = IndexSet::empty(n);
    let (mut lam, mut ok) = certify(a, &removed, beta)?;
    let mut evals = 1;
    let mut steps = Vec::new();
    while !ok && removed.len() + 1 < n {
        let v = next(&removed);
        removed = removed.with(v);
        (lam, ok) = certify(a, &removed, beta)?;
        evals += 1;
        steps.push(Step {
            index: v,
            value: lam,
        });
    }
    Ok(SelectionResult {
        removed,
        method,
        steps,
        final_lambda_min: lam,
        alpha_used: None,
        beta,
        bound_ratio: None,
        outcome: if ok {
            Outcome::Certified
        } else {
            Outcome::GroundedToSingleton
        },
        oracle_evals: evals,
        diagnostic: None,
    })
}

/// Repeatedly removes the kept index with the largest diagonal entry.
pub fn baseline_degree(a: &SymMatrix, beta: f64) -> Result<SelectionResult> {
    let diag = a.diagonal();
    remove_until_certified(a, beta, Method::Degree, |removed| {
        let mut best = None;
        for v in removed.complement().iter() {
            if best.is_none_or(|b: usize| diag[v] > diag[b]) {
                best = Some(v);
            }
        }
        best.expect("nonempty kept set")
    })
}

/// Removes indices in a seeded uniformly random order.
pub fn baseline_random(a: &SymMatrix, beta: f64, seed: u64) -> Result<SelectionResult> {
    let mut order: Vec<usize> = (0..a.dim()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut it = order.into_iter();
    remove_until_certified(a, beta, Method::Random, move |_| {
        it.next().expect("order covers all indices")
    })
}
