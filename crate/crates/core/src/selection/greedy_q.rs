//! Greedy selection on the certificate `Q(S)`.

use rayon::prelude::*;

use super::{certify, Method, Outcome, SelectionResult, Step};
use crate::error::{Error, Result};
use crate::linalg::{add_alpha_diag, eigenvalues_sym, IndexSet, SymMatrix};
use crate::quadform::{
    budget_from_eigenvalues, log_neg_q_contour, q_from_eigenvalues, QuadBudget, EPS_Q,
};

/// How `Q` is evaluated inside the greedy loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QEvaluator {
    /// Saddle-point contour integral; relative accuracy, so tiny `|Q|` still
    /// orders candidates correctly.
    Contour,
    /// Imhof midpoint sum with `R, K, N` scheduled from each spectrum at
    /// absolute accuracy `eps`.
    ImhofAdaptive { eps: f64 },
    /// Imhof midpoint sum with one budget for every evaluation.
    ImhofFixed(QuadBudget),
}

impl QEvaluator {
    /// `ln(−Q)`, `None` when `Q = 0`.
    fn log_neg_q(&self, eigs: &[f64], zero_tol: f64) -> Result<Option<f64>> {
        let q = match *self {
            QEvaluator::Contour => return Ok(log_neg_q_contour(eigs, zero_tol)),
            QEvaluator::ImhofAdaptive { eps } => q_from_eigenvalues(
                eigs,
                zero_tol,
                &budget_from_eigenvalues(eigs, zero_tol, eps)?,
            ),
            QEvaluator::ImhofFixed(b) => {
                b.validate()?;
                q_from_eigenvalues(eigs, zero_tol, &b)
            }
        };
        Ok((q < 0.0).then(|| (-q).ln()))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            QEvaluator::Contour => Ok(()),
            QEvaluator::ImhofAdaptive { eps } if eps > 0.0 => Ok(()),
            QEvaluator::ImhofAdaptive { eps } => Err(Error::InvalidParameter(format!(
                "budget eps must be positive, got {eps}"
            ))),
            QEvaluator::ImhofFixed(b) => b.validate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyQConfig {
    pub evaluator: QEvaluator,
    /// Loop runs while `Q(S) < −eps_q`; 0 means until `Q(S) = 0` exactly.
    pub eps_q: f64,
    /// Starting α; [`choose_alpha`] when `None`.
    pub alpha: Option<f64>,
    pub max_doublings: u32,
}

impl Default for GreedyQConfig {
    fn default() -> Self {
        Self {
            evaluator: QEvaluator::Contour,
            eps_q: 0.0,
            alpha: None,
            max_doublings: 12,
        }
    }
}

impl GreedyQConfig {
    /// The Imhof evaluator at accuracy `eps` with the default stop tolerance.
    pub fn imhof(eps: f64) -> Self {
        Self {
            evaluator: QEvaluator::ImhofAdaptive { eps },
            eps_q: EPS_Q,
            ..Self::default()
        }
    }
}

/// `max(1, 2(|λ_min| + λ_max⁺))`.
pub fn choose_alpha(a: &SymMatrix) -> f64 {
    let eigs = match eigenvalues_sym(a) {
        Ok(e) => e,
        Err(_) => return 1.0,
    };
    let lmax = eigs.first().copied().unwrap_or(0.0);
    let lmin = eigs.last().copied().unwrap_or(0.0);
    (2.0 * (lmin.abs() + lmax.max(0.0))).max(1.0)
}

fn log_neg_q_at(
    a_hat: &SymMatrix,
    s: &IndexSet,
    alpha: f64,
    eval: &QEvaluator,
) -> Result<Option<f64>> {
    let m = add_alpha_diag(a_hat, s, alpha);
    let eigs = eigenvalues_sym(&m)?;
    eval.log_neg_q(&eigs, m.pd_tolerance())
}

fn to_q(l: Option<f64>) -> f64 {
    l.map_or(0.0, |l| -l.exp())
}

/// Candidate `a` beats `b` when its Q is larger, i.e. `ln(−Q)` smaller.
fn beats(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => false,
        (None, Some(_)) => true,
        (Some(_), None) => false,
        (Some(x), Some(y)) => x < y,
    }
}

struct Pass {
    removed: IndexSet,
    steps: Vec<Step>,
    /// `ln(−Q(S_t))` along the path.
    trace: Vec<Option<f64>>,
    q_certified: bool,
    evals: usize,
}

fn greedy_pass(a_hat: &SymMatrix, alpha: f64, cfg: &GreedyQConfig) -> Result<Pass> {
    let n = a_hat.dim();
    let done = |l: Option<f64>| to_q(l) >= -cfg.eps_q;
    let mut removed = IndexSet::empty(n);
    let mut cur = log_neg_q_at(a_hat, &removed, alpha, &cfg.evaluator)?;
    let mut evals = 1;
    let mut steps = Vec::new();
    let mut trace = vec![cur];

    while !done(cur) && removed.len() + 1 < n {
        let candidates: Vec<usize> = removed.complement().iter().collect();
        let values: Vec<Result<Option<f64>>> = candidates
            .par_iter()
            .map(|&v| log_neg_q_at(a_hat, &removed.with(v), alpha, &cfg.evaluator))
            .collect();
        evals += candidates.len();
        let mut best: Option<(usize, Option<f64>)> = None;
        for (&v, val) in candidates.iter().zip(values) {
            let val = val?;
            if best.is_none_or(|(_, b)| beats(val, b)) {
                best = Some((v, val));
            }
        }
        let (v, val) = best.expect("at least two kept indices");
        removed = removed.with(v);
        steps.push(Step {
            index: v,
            value: to_q(val),
        });
        trace.push(val);
        cur = val;
    }
    Ok(Pass {
        removed,
        steps,
        trace,
        q_certified: done(cur),
        evals,
    })
}

/// Greedy minimum removal so that `λ_min(A(V∖S)) ≥ β`.
///
/// Runs on `Â = A − βI`. If the pass ends without the certificate or the
/// eigensolve disagrees with it, α is doubled and the pass restarts.
pub fn greedy_q(a: &SymMatrix, beta: f64, cfg: &GreedyQConfig) -> Result<SelectionResult> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite, got {beta}"
        )));
    }
    if !(cfg.eps_q >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps_q must be nonnegative, got {}",
            cfg.eps_q
        )));
    }
    cfg.evaluator.validate()?;
    let n = a.dim();
    if n == 0 {
        return Err(Error::EmptySubmatrix);
    }
    let a_hat = a.shifted(beta);
    let tol = a_hat.pd_tolerance();
    let mut alpha = match cfg.alpha {
        Some(x) if x > 0.0 && x.is_finite() => x,
        Some(x) => {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {x}"
            )))
        }
        None => choose_alpha(&a_hat),
    };
    // Escalation only helps if some single index can be kept.
    let singleton_feasible = a_hat.diagonal().iter().any(|&d| d >= -tol);

    let mut total_evals = 0;
    let mut doublings = 0;
    loop {
        let pass = greedy_pass(&a_hat, alpha, cfg)?;
        total_evals += pass.evals;
        let (lam, ok) = certify(a, &pass.removed, beta)?;
        let settled = pass.q_certified && ok;
        if settled || !singleton_feasible || doublings >= cfg.max_doublings {
            let mut diagnostic = None;
            if !settled {
                diagnostic = Some(if pass.q_certified {
                    format!("Q certificate met but eigensolve gives lambda_min = {lam:e}")
                } else {
                    format!("Q(S) did not reach 0 (last alpha = {alpha})")
                });
            }
            let bound_ratio = ratio_bound(&pass.trace, cfg.eps_q, &mut diagnostic);
            let outcome = if ok {
                Outcome::Certified
            } else {
                Outcome::GroundedToSingleton
            };
            return Ok(SelectionResult {
                removed: pass.removed,
                method: Method::GreedyQ,
                steps: pass.steps,
                final_lambda_min: lam,
                alpha_used: Some(alpha),
                beta,
                bound_ratio,
                outcome,
                oracle_evals: total_evals,
                diagnostic,
            });
        }
        alpha *= 2.0;
        doublings += 1;
    }
}

fn ratio_bound(trace: &[Option<f64>], eps_q: f64, diagnostic: &mut Option<String>) -> Option<f64> {
    let t = trace.len() - 1;
    if t == 0 {
        return None;
    }
    match (trace[0], trace[t - 1]) {
        (Some(l0), Some(lp)) if lp.exp() > eps_q => Some(1.0 + (l0 - lp)),
        _ => {
            diagnostic.get_or_insert_with(|| "Q(S_{T-1}) within quadrature noise of 0".into());
            Some(f64::INFINITY)
        }
    }
}
