//! The three experiment models and their shared scalar primitives.

pub mod audio;
pub mod blr;
pub mod random_effects;
pub mod toy;

pub use audio::{AudioModel, AudioProblem};
pub use blr::{BlrModel, LogisticData};
pub use random_effects::{RandomEffectsModel, RandomEffectsProblem};
pub use toy::ToyGaussian;

/// Logistic cdf, stable for |u| up to the overflow range (branch on sign).
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^u) without overflow for large |u|.
pub fn log1pexp(u: f64) -> f64 {
    if u <= -37.0 {
        u.exp()
    } else if u <= 18.0 {
        u.exp().ln_1p()
    } else if u <= 33.3 {
        u + (-u).exp()
    } else {
        u
    }
}

/// Huber function: quadratic inside the knee |u| <= lambda, linear beyond.
/// Ties at |u| = lambda take the quadratic branch.
pub fn huber(u: f64, lambda: f64) -> f64 {
    if u.abs() <= lambda {
        0.5 * u * u
    } else {
        lambda * (u.abs() - 0.5 * lambda)
    }
}

pub fn huber_grad(u: f64, lambda: f64) -> f64 {
    if u.abs() <= lambda {
        u
    } else {
        lambda * u.signum()
    }
}
