//! Row/column selection: find a small removed set `S` such that
//! `λ_min(A(V∖S)) ≥ β`.
//!
//! Every public selector takes and reports `S` as the *removed* set. Every
//! success is confirmed by a direct eigensolve of the kept block before it is
//! reported.

mod baseline;
mod brute;
mod greedy_q;
mod inv_trace;
mod logdet;
mod nonsym;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lambda_min_kept, IndexSet, SymMatrix};

pub use baseline::{baseline_degree, baseline_random};
pub use brute::{brute_force_min_set, BRUTE_FORCE_MAX_N};
pub use greedy_q::{choose_alpha, greedy_q, GreedyQConfig, QEvaluator};
pub use inv_trace::{greedy_inv_trace, inverse_trace_objective, signed_parts};
pub use logdet::{
    logdet_cardinality_sweep, logdet_condition_margin, merikoski_bound, DEFAULT_LOGDET_ZETA,
};
pub use nonsym::greedy_nonsymmetric;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GreedyQ,
    InvTrace,
    Logdet,
    Degree,
    Random,
    BruteForce,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::GreedyQ,
        Method::InvTrace,
        Method::Logdet,
        Method::Degree,
        Method::Random,
        Method::BruteForce,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::GreedyQ => "greedy_q",
            Method::InvTrace => "inv_trace",
            Method::Logdet => "logdet",
            Method::Degree => "degree",
            Method::Random => "random",
            Method::BruteForce => "brute_force",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// The kept block passed the eigensolve check.
    Certified,
    /// Removal stopped with one index kept and the bound still fails.
    GroundedToSingleton,
    /// A sufficient condition could not be met for any cardinality.
    Unsatisfiable,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Certified => "certified",
            Outcome::GroundedToSingleton => "grounded_to_singleton",
            Outcome::Unsatisfiable => "unsatisfiable",
        }
    }
}

/// One greedy step: the index removed and the method's objective afterwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub index: usize,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct SelectionResult {
    pub removed: IndexSet,
    pub method: Method,
    pub steps: Vec<Step>,
    /// λ_min of the kept block of the caller's matrix (minimum real part for
    /// the non-symmetric selector).
    pub final_lambda_min: f64,
    pub alpha_used: Option<f64>,
    pub beta: f64,
    /// Greedy ratio bound `1 + ln(|Q(∅)| / |Q(S_{T−1})|)`.
    pub bound_ratio: Option<f64>,
    pub outcome: Outcome,
    /// Objective-oracle evaluations (Q, F, log det or eigensolves).
    pub oracle_evals: usize,
    pub diagnostic: Option<String>,
}

impl SelectionResult {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Certified
    }

    pub fn kept(&self) -> IndexSet {
        self.removed.complement()
    }
}

/// Checks `λ_min(A(kept)) ≥ β − ε_pd` for the complement of `removed`.
/// Returns the kept-block λ_min and the verdict.
pub fn certify(a: &SymMatrix, removed: &IndexSet, beta: f64) -> Result<(f64, bool)> {
    let lam = lambda_min_kept(a, &removed.complement())?;
    Ok((lam, lam >= beta - a.pd_tolerance()))
}

/// Knobs shared by [`run_method`].
#[derive(Clone, Debug)]
pub struct MethodParams {
    pub greedy: GreedyQConfig,
    pub logdet_alpha: Option<f64>,
    pub logdet_zeta: f64,
    pub seed: u64,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            greedy: GreedyQConfig::default(),
            logdet_alpha: None,
            logdet_zeta: DEFAULT_LOGDET_ZETA,
            seed: 0,
        }
    }
}

/// Dispatches one selector on `A` with threshold `β`.
pub fn run_method(
    method: Method,
    a: &SymMatrix,
    beta: f64,
    params: &MethodParams,
) -> Result<SelectionResult> {
    match method {
        Method::GreedyQ => greedy_q(a, beta, &params.greedy),
        Method::InvTrace => greedy_inv_trace(a, beta.max(0.0)),
        Method::Logdet => {
            let shifted = a.shifted(beta);
            let alpha = params
                .logdet_alpha
                .unwrap_or_else(|| choose_alpha(&shifted));
            let mut res = logdet_cardinality_sweep(&shifted, alpha, params.logdet_zeta)?;
            res.final_lambda_min = lambda_min_kept(a, &res.kept())?;
            res.beta = beta;
            Ok(res)
        }
        Method::Degree => baseline_degree(a, beta),
        Method::Random => baseline_random(a, beta, params.seed),
        Method::BruteForce => brute_force_min_set(a, beta),
    }
}
