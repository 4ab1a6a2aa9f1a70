//! Indefinite Gaussian quadratic forms.
//!
//! For `w ~ N(0, I)` and symmetric `M = U·diag(λ)·Uᵀ`, the form `wᵀMw` has the
//! law of `Σ λ_i Y_i` with `Y_i` i.i.d. χ²₁. The certificate
//!
//! ```text
//! Q(S) = E[min(wᵀ(A + αD(S))w, 0)] = −∫₀^∞ Pr(Ẑ > z) dz,   Ẑ = −Σ λ_i Y_i
//! ```
//!
//! is evaluated as a midpoint sum over `[0, R]` of the Imhof survival
//! function truncated at `K`. Two things keep that affordable:
//!
//! * every outer node shares one inner quadrature grid, so the sum over the
//!   `N` outer nodes collapses to a Dirichlet kernel inside the inner
//!   integral;
//! * outer nodes beyond the point where the Chernoff bound on `Pr(Ẑ > z)`
//!   integrates to less than the tolerance are dropped.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{add_alpha_diag, eigenvalues_sym, IndexSet, SymMatrix};

pub const C_OUTER: f64 = 4.0;
pub const C_INNER: f64 = 50.0;
pub const C_NODES: f64 = 1.0;
pub const MAX_OUTER_NODES: usize = 200_000;

/// Default termination tolerance for "Q(S) = 0".
pub const EPS_Q: f64 = 1e-6;

/// Weighted sum `Σ a_r Y_r` of independent χ²₁ variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareMix {
    coeffs: Vec<f64>,
}

impl ChiSquareMix {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "mixture needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite);
        }
        if coeffs.iter().all(|&a| a == 0.0) {
            return Err(Error::DegenerateDistribution);
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mean(&self) -> f64 {
        self.coeffs.iter().sum()
    }
}

/// Truncation parameters for the certificate quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadBudget {
    /// Target absolute error on Q.
    pub eps: f64,
    /// Outer integral truncation `R`.
    pub outer_limit: f64,
    /// Imhof integral truncation `K`.
    pub inner_limit: f64,
    /// Outer midpoint node count `N`.
    pub outer_nodes: usize,
}

impl QuadBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.outer_limit > 0.0 && self.inner_limit > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid budget {self:?}")));
        }
        if self.outer_nodes < 2 {
            return Err(Error::InvalidParameter(
                "budget needs at least 2 outer nodes".into(),
            ));
        }
        Ok(())
    }
}

/// Truncation schedule `R ∝ (−ln ε + n)·λ_max`, `K ∝ 1/λ_min`, `N ∝ R/ε`.
pub fn default_budget(a: &SymMatrix, eps: f64) -> Result<QuadBudget> {
    let eigs = eigenvalues_sym(a)?;
    budget_from_eigenvalues(&eigs, a.pd_tolerance(), eps)
}

pub fn budget_from_eigenvalues(eigs: &[f64], zero_tol: f64, eps: f64) -> Result<QuadBudget> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let n = eigs.len() as f64;
    let scale = eigs.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
    let min_nonzero = eigs
        .iter()
        .map(|l| l.abs())
        .filter(|&l| l > zero_tol)
        .fold(f64::INFINITY, f64::min);
    let outer_limit = C_OUTER * (-eps.ln() + n) * scale;
    let inner_limit = C_INNER / min_nonzero.max(eps);
    let outer_nodes = ((C_NODES * outer_limit / eps).ceil() as usize).clamp(2, MAX_OUTER_NODES);
    Ok(QuadBudget {
        eps,
        outer_limit,
        inner_limit,
        outer_nodes,
    })
}

/// Phase `φ(u) = ½ Σ atan(a u)` and `ln ρ(u) = ¼ Σ ln(1 + a²u²)`.
#[inline]
fn phase_and_log_modulus(coeffs: &[f64], u: f64) -> (f64, f64) {
    let mut phase = 0.0;
    let mut prod = 1.0;
    let mut log_acc = 0.0;
    for &a in coeffs {
        let au = a * u;
        phase += au.atan();
        prod *= 1.0 + au * au;
        if prod > 1e250 {
            log_acc += prod.ln();
            prod = 1.0;
        }
    }
    (0.5 * phase, 0.25 * (log_acc + prod.ln()))
}

/// Imhof integrand `sin θ(u) / (u ρ(u))`, with its `u → 0` limit `½(Σa − w)`.
fn imhof_integrand(coeffs: &[f64], w: f64, u: f64) -> f64 {
    let (phase, log_rho) = phase_and_log_modulus(coeffs, u);
    let theta = phase - 0.5 * w * u;
    if u.abs() < 1e-300 {
        return 0.5 * (coeffs.iter().sum::<f64>() - w);
    }
    theta.sin() / (u * log_rho.exp())
}

const IMHOF_TOL: f64 = 1e-7;
const IMHOF_MAX_NODES: usize = 5_000_000;

/// `Pr(W > w)` from the Imhof inversion integral truncated at `k`, using
/// midpoint refinement (node count tripled each round, so earlier nodes are
/// reused) until successive estimates agree to `1e-7`.
pub fn imhof_survival(mix: &ChiSquareMix, w: f64, k: f64, inner_nodes: usize) -> Result<f64> {
    if mix.coeffs.iter().all(|&a| a == 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "truncation K must be positive, got {k}"
        )));
    }
    if inner_nodes < 8 {
        return Err(Error::InvalidParameter(
            "need at least 8 inner nodes".into(),
        ));
    }
    let f = |u: f64| imhof_integrand(&mix.coeffs, w, u);
    let mut n = inner_nodes;
    let mut h = k / n as f64;
    let mut sum: f64 = (0..n).map(|i| f((i as f64 + 0.5) * h)).sum();
    let mut estimate = sum * h;
    while n * 3 <= IMHOF_MAX_NODES {
        // Each old cell splits into thirds; the old midpoint is the middle one.
        let h3 = h / 3.0;
        let extra: f64 = (0..n)
            .map(|i| {
                let left = i as f64 * h;
                f(left + 0.5 * h3) + f(left + 2.5 * h3)
            })
            .sum();
        sum += extra;
        n *= 3;
        h = h3;
        let refined = sum * h;
        let delta = (refined - estimate).abs();
        estimate = refined;
        if delta < IMHOF_TOL {
            break;
        }
    }
    Ok((0.5 + estimate / PI).clamp(0.0, 1.0))
}

/// Chernoff bound on `Pr(W > z)` at `t = 1/(4 a_max)`:
/// `exp(−z/(4a_max))·Π(1 − a_r/(2a_max))^{−1/2}`.
pub fn tail_bound_chernoff(mix: &ChiSquareMix, z: f64) -> Result<f64> {
    let a_max = mix.coeffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(a_max > 0.0) {
        return Err(Error::NoPositiveTail);
    }
    Ok((-z / (4.0 * a_max) + log_chernoff_factor(&mix.coeffs, a_max)).exp())
}

fn log_chernoff_factor(coeffs: &[f64], a_max: f64) -> f64 {
    -0.5 * coeffs
        .iter()
        .map(|&a| (1.0 - a / (2.0 * a_max)).ln())
        .sum::<f64>()
}

/// Q(S) for the removed set `s`: eigendecompose `A + αD(S)` and integrate.
pub fn q_value(a: &SymMatrix, s: &IndexSet, alpha: f64, budget: &QuadBudget) -> Result<f64> {
    budget.validate()?;
    let m = add_alpha_diag(a, s, alpha);
    let eigs = eigenvalues_sym(&m)?;
    Ok(q_from_eigenvalues(&eigs, m.pd_tolerance(), budget))
}

/// Q from the spectrum of `A + αD(S)`. Eigenvalues with `|λ| ≤ zero_tol` are
/// dropped; an all-nonnegative spectrum gives exactly 0 and an all-negative
/// one gives exactly `Σλ`.
pub fn q_from_eigenvalues(eigs: &[f64], zero_tol: f64, budget: &QuadBudget) -> f64 {
    // Coefficients of Ẑ = −Z.
    let coeffs: Vec<f64> = eigs
        .iter()
        .filter(|l| l.abs() > zero_tol)
        .map(|&l| -l)
        .collect();
    if coeffs.iter().all(|&b| b < 0.0) {
        return 0.0;
    }
    if coeffs.iter().all(|&b| b > 0.0) {
        return -coeffs.iter().sum::<f64>();
    }
    let positive_part = truncated_positive_part(&coeffs, budget);
    (-positive_part).min(0.0)
}

/// Midpoint sum `δ Σ_i ḡ(z_i)` of the truncated Imhof survival function of
/// `Σ b_r Y_r` over `z_i = (i − ½)δ`, `δ = R/N`.
///
/// Summing `sin(φ(u) − z_i u/2)` over the nodes gives
/// `sin(φ − N'x)·sin(N'x)/sin(x)` with `x = δu/4`, so the whole sum is
/// `N'δ/2 + (1/π)∫₀^U δ·sin(φ − N'x)·D(x) / (u ρ(u)) du`.
fn truncated_positive_part(coeffs: &[f64], budget: &QuadBudget) -> f64 {
    let tol = budget.eps * 1e-2;
    let delta = budget.outer_limit / budget.outer_nodes as f64;
    let b_max = coeffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let abs_max = coeffs.iter().fold(0.0_f64, |m, b| m.max(b.abs()));

    // Outer nodes past `r_needed` contribute at most ∫_{r_needed}^∞ of the
    // Chernoff bound, which is below `tol`.
    let r_needed = 4.0 * b_max * (log_chernoff_factor(coeffs, b_max) + (4.0 * b_max / tol).ln());
    let nodes = if r_needed >= budget.outer_limit {
        budget.outer_nodes
    } else {
        ((r_needed / delta).ceil() as usize).clamp(1, budget.outer_nodes)
    };
    let span = nodes as f64 * delta;

    // |kernel| ≤ 2π/u for u ≤ 2π/δ, so the tail past U is at most
    // 2/(U ρ(U)); grow U geometrically until that is below tol.
    let mut upper = 1.0 / abs_max;
    while upper < budget.inner_limit {
        let (_, log_rho) = phase_and_log_modulus(coeffs, upper);
        if (2.0_f64).ln() - upper.ln() - log_rho <= tol.ln() {
            break;
        }
        upper *= 2.0;
    }
    let upper = upper.min(budget.inner_limit);

    let nodes_f = nodes as f64;
    let kernel = |u: f64| -> f64 {
        let (phase, log_rho) = phase_and_log_modulus(coeffs, u);
        let x = 0.25 * delta * u;
        let dirichlet = dirichlet_ratio(nodes_f, x);
        delta * (phase - nodes_f * x).sin() * dirichlet / (u * log_rho.exp())
    };

    // Oscillation: sin(N'x) and sin(φ − N'x) each turn at up to span/4 + φ'(0).
    let slope0 = 0.5 * coeffs.iter().map(|b| b.abs()).sum::<f64>();
    let omega = 0.5 * span + slope0;
    let width = (PI / omega).min(2.0 / abs_max).min(upper);
    let panels = ((upper / width).ceil() as usize).clamp(1, 200_000);
    let integral = adaptive_gauss(&kernel, 0.0, upper, panels, tol);
    0.5 * span + integral / PI
}

/// `sin(N x)/sin(x)`, using the l'Hôpital limit where `sin x` vanishes.
#[inline]
fn dirichlet_ratio(n: f64, x: f64) -> f64 {
    let s = x.sin();
    if s.abs() < 1e-10 {
        n * (n * x).cos() / x.cos()
    } else {
        (n * x).sin() / s
    }
}

struct GaussRules {
    low: (Vec<f64>, Vec<f64>),
    high: (Vec<f64>, Vec<f64>),
}

fn gauss_rules() -> &'static GaussRules {
    static RULES: OnceLock<GaussRules> = OnceLock::new();
    RULES.get_or_init(|| GaussRules {
        low: gauss_legendre(8),
        high: gauss_legendre(16),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gauss_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite 16-point Gauss–Legendre on `panels` equal panels; a panel whose
/// 8/16-point estimates disagree by more than its share of `tol` is bisected.
fn adaptive_gauss(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let rules = gauss_rules();
    let width = (b - a) / panels as f64;
    let density = tol / (b - a);
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64, u32)> = Vec::new();
    for p in 0..panels {
        stack.push((a + p as f64 * width, a + (p + 1) as f64 * width, 0));
        while let Some((lo, hi, depth)) = stack.pop() {
            let fine = gauss_panel(f, lo, hi, &rules.high);
            let coarse = gauss_panel(f, lo, hi, &rules.low);
            if (fine - coarse).abs() <= density * (hi - lo) || depth >= 20 {
                total += fine;
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
    }
    total
}

/// `ln(−Q)` from the spectrum of `A + αD(S)`, or `None` when `Q = 0`
/// (no eigenvalue below `−zero_tol`).
///
/// Uses `E[Ẑ⁺] = (1/2πi)∫_{c−i∞}^{c+i∞} M(s)/s² ds` with `M` the moment
/// generating function of `Ẑ`, on the vertical line through the saddle point
/// of `M(c)/c²`. With `s = c(1 + i·tan θ)` this becomes
/// `E[Ẑ⁺] = (M(c)/(πc))·∫₀^{π/2} Re[M(s)/M(c)·e^{−2iθ}] dθ`, whose integrand
/// is non-oscillatory near the peak, so the result carries relative rather
/// than absolute accuracy and stays meaningful when `|Q|` is far below any
/// fixed tolerance.
pub fn log_neg_q_contour(eigs: &[f64], zero_tol: f64) -> Option<f64> {
    let coeffs: Vec<f64> = eigs
        .iter()
        .filter(|l| l.abs() > zero_tol)
        .map(|&l| -l)
        .collect();
    let b_max = coeffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(b_max > 0.0) {
        return None;
    }
    if coeffs.iter().all(|&b| b > 0.0) {
        return Some(coeffs.iter().sum::<f64>().ln());
    }
    let c_max = 0.5 / b_max;

    // h(c) = K(c) − 2 ln c is convex on (0, c_max); bisect h'(c) = 0.
    let h_prime = |c: f64| coeffs.iter().map(|&b| b / (1.0 - 2.0 * b * c)).sum::<f64>() - 2.0 / c;
    let (mut lo, mut hi) = (0.0, c_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h_prime(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let k_c = -0.5
        * coeffs
            .iter()
            .map(|&b| (1.0 - 2.0 * b * c).ln())
            .sum::<f64>();
    let k2: f64 = coeffs
        .iter()
        .map(|&b| 2.0 * b * b / (1.0 - 2.0 * b * c).powi(2))
        .sum();
    let sigma = 1.0 / k2.sqrt();

    let integrand = |theta: f64| -> f64 {
        let t = c * theta.tan();
        if !t.is_finite() {
            return 0.0;
        }
        // K(c + it) − K(c) = −½ Σ ln(1 − 2b(c + it)) + ½ Σ ln(1 − 2bc).
        let mut re = 0.0;
        let mut im = 0.0;
        for &b in &coeffs {
            let x = 1.0 - 2.0 * b * c;
            let y = -2.0 * b * t;
            re -= 0.25 * (1.0 + (y / x).powi(2)).ln();
            im -= 0.5 * y.atan2(x);
        }
        re.exp() * (im - 2.0 * theta).cos()
    };

    // Panels geometric in t from the saddle width outwards.
    let mut breaks = vec![0.0];
    let mut t = 0.25 * sigma;
    loop {
        let theta = (t / c).atan();
        if theta >= FRAC_PI_2 * (1.0 - 1e-12) {
            break;
        }
        breaks.push(theta);
        t *= 2.0;
    }
    breaks.push(FRAC_PI_2);
    let scale = (sigma / c).min(FRAC_PI_2);
    let tol = 1e-12 * scale;
    let j: f64 = breaks
        .windows(2)
        .map(|w| adaptive_gauss(&integrand, w[0], w[1], 1, tol))
        .sum();
    if !(j > 0.0) {
        // Cancellation swamped the integral; fall back to E[Ẑ⁺] ≤ M(c)/(c·e).
        return Some(k_c - c.ln() - 1.0);
    }
    Some(k_c - c.ln() + (j / PI).ln())
}

/// Q from the spectrum via [`log_neg_q_contour`].
pub fn q_contour_from_eigenvalues(eigs: &[f64], zero_tol: f64) -> f64 {
    match log_neg_q_contour(eigs, zero_tol) {
        None => 0.0,
        Some(l) => -l.exp(),
    }
}

/// Q(S) to relative accuracy (see [`log_neg_q_contour`]).
pub fn q_value_contour(a: &SymMatrix, s: &IndexSet, alpha: f64) -> Result<f64> {
    let m = add_alpha_diag(a, s, alpha);
    let eigs = eigenvalues_sym(&m)?;
    Ok(q_contour_from_eigenvalues(&eigs, m.pd_tolerance()))
}

/// Monte Carlo estimate of Q(S) with its standard error, straight from the
/// definition: the mean of `min(wᵀ(A + αD(S))w, 0)` over Gaussian `w`.
pub fn q_value_mc(
    a: &SymMatrix,
    s: &IndexSet,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least 1000 samples, got {samples}"
        )));
    }
    let m = add_alpha_diag(a, s, alpha);
    let n = m.dim();
    let data = m.as_dmatrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; n];
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..samples {
        for x in w.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        let mut form = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += data[(i, j)] * w[j];
            }
            form += w[i] * row;
        }
        let y = form.min(0.0);
        let d = y - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (y - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok((mean, (var / samples as f64).sqrt()))
}
