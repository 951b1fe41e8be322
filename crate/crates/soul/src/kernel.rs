//! Unadjusted Langevin kernel and chain runner.
//!
//! One step moves the state along the gradient of the log target and adds
//! Gaussian noise scaled by sqrt(2 gamma). The gradient enters with a plus
//! sign, so the chain targets the density itself (gradient ascent on the
//! log density).

use ndarray::Array1;

use crate::error::{Result, SoulError};
use crate::rng::RngStream;

/// One Euler-Maruyama step: x + gamma * grad(x) + sqrt(2 gamma) * z.
///
/// Consumes exactly `x.len()` Gaussian draws. `iteration` only labels
/// errors.
pub fn ula_step<G>(
    x: &Array1<f64>,
    grad_log_target: G,
    gamma: f64,
    rng: &mut RngStream,
    iteration: usize,
) -> Result<Array1<f64>>
where
    G: Fn(&Array1<f64>) -> Array1<f64>,
{
    if gamma < 0.0 {
        return Err(SoulError::InvalidArgument(format!(
            "gamma must be non-negative, got {gamma}"
        )));
    }
    let grad = grad_log_target(x);
    if grad.len() != x.len() {
        return Err(SoulError::DimensionMismatch {
            expected: x.len(),
            got: grad.len(),
        });
    }
    if !grad.iter().all(|g| g.is_finite()) {
        return Err(SoulError::NonFinite {
            context: "ula_step gradient",
            iteration,
        });
    }
    let noise_scale = (2.0 * gamma).sqrt();
    let z = rng.standard_normal_vec(x.len());
    let next = x + gamma * &grad + noise_scale * &z;
    if !next.iter().all(|v| v.is_finite()) {
        return Err(SoulError::NonFinite {
            context: "ula_step state",
            iteration,
        });
    }
    Ok(next)
}

/// Runs `m` ULA steps from `x0`, returning every visited state (after 1..=m
/// steps) plus the final state for warm-start handoff.
pub fn run_chain<G>(
    x0: &Array1<f64>,
    grad_log_target: G,
    gamma: f64,
    m: u64,
    rng: &mut RngStream,
) -> Result<(Vec<Array1<f64>>, Array1<f64>)>
where
    G: Fn(&Array1<f64>) -> Array1<f64>,
{
    if m == 0 {
        return Err(SoulError::InvalidArgument("chain length m must be >= 1".into()));
    }
    let mut samples = Vec::with_capacity(m as usize);
    let mut x = x0.clone();
    for k in 0..m {
        x = ula_step(&x, &grad_log_target, gamma, rng, k as usize)?;
        samples.push(x.clone());
    }
    let last = samples.last().expect("m >= 1").clone();
    Ok((samples, last))
}
