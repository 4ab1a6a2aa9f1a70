//! Grounded consensus dynamics `ẋ = −L(kept)·x`, propagated exactly through
//! the eigendecomposition of the kept block. Removed nodes are held at 0.

use std::io::Write;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{eig_sym, submatrix, IndexSet, SymMatrix};

/// Relative tolerance on the `e^{−λ_min t}` envelope.
pub const RATE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One row per time; columns follow `kept` order.
    pub states: Vec<Vec<f64>>,
    pub kept: Vec<usize>,
    pub lambda_min_used: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateCheck {
    pub holds: bool,
    /// Largest `(‖x(t)‖ − e^{−λt}‖x(0)‖) / (e^{−λt}‖x(0)‖)` over the samples.
    pub max_violation: f64,
}

/// Samples `x(t) = U·e^{−Λt}·Uᵀ·x0` at `t = 0, dt, 2dt, …, ≤ horizon`.
pub fn consensus_trajectory(
    l: &SymMatrix,
    removed: &IndexSet,
    x0: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be at least dt = {dt}"
        )));
    }
    if removed.ambient_n() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: removed.ambient_n(),
        });
    }
    let kept = removed.complement();
    if x0.len() != kept.len() {
        return Err(Error::DimensionMismatch {
            expected: kept.len(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let spec = eig_sym(&submatrix(l, &kept)?)?;
    let u = &spec.basis;
    let y0 = u.transpose() * DVector::from_column_slice(x0);

    let steps = (horizon / dt + 1e-9).floor() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let decayed = DVector::from_iterator(
            y0.len(),
            y0.iter()
                .zip(&spec.eigenvalues)
                .map(|(y, lam)| y * (-lam * t).exp()),
        );
        let x = if k == 0 {
            DVector::from_column_slice(x0)
        } else {
            u * decayed
        };
        times.push(t);
        states.push(x.iter().copied().collect());
    }
    Ok(Trajectory {
        times,
        states,
        kept: kept.members().to_vec(),
        lambda_min_used: spec.lambda_min(),
    })
}

/// Standard normal initial state, deterministic per seed.
pub fn random_initial_state(k: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Checks `‖x(t)‖ ≤ e^{−λ_min t}‖x(0)‖` at every sample.
pub fn verify_rate(traj: &Trajectory) -> RateCheck {
    let n0 = norm(&traj.states[0]);
    let mut worst: f64 = 0.0;
    if n0 > 0.0 {
        for (t, x) in traj.times.iter().zip(&traj.states) {
            let bound = (-traj.lambda_min_used * t).exp() * n0;
            let v = if bound > 0.0 {
                (norm(x) - bound) / bound
            } else {
                f64::INFINITY
            };
            worst = worst.max(v);
        }
    }
    RateCheck {
        holds: worst <= RATE_TOL,
        max_violation: worst,
    }
}

/// `½‖x(t)‖²` never increases along the samples (up to rounding).
pub fn energy_nonincreasing(traj: &Trajectory) -> bool {
    let energies: Vec<f64> = traj
        .states
        .iter()
        .map(|x| 0.5 * x.iter().map(|v| v * v).sum::<f64>())
        .collect();
    energies
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + f64::MIN_POSITIVE)
}

/// CSV with header `t,x_0,…,x_{k−1}`, columns in kept-index order.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((0..traj.kept.len()).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
