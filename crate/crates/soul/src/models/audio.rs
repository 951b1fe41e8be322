//! Compressive-sensing audio model: Gaussian likelihood on subsampled
//! dictionary coefficients with a smoothed-Laplace (Huberized) sparsity
//! prior whose scale theta is the parameter being estimated.
//!
//! The prior's theta-dependent normalizer matters for the drift of the
//! stochastic approximation: p(x|theta) = z(theta)^{-d} exp(-theta sum
//! h_lambda(x_i)) with z the one-dimensional normalizing integral, so the
//! theta-gradient of the joint carries an extra -d z'(theta)/z(theta) term.

use ndarray::{Array1, Array2};
use statrs::function::erf::erf;

use crate::domain::ParameterDomain;
use crate::error::{Result, SoulError};
use crate::models::{huber, huber_grad};
use crate::optimizer::Model;

/// One compressive-sensing instance. The measurement operator is a row
/// selector: `measurement_rows[j]` is the time index observed by row j.
#[derive(Debug, Clone)]
pub struct AudioProblem {
    pub dictionary: Array2<f64>,
    pub measurement_rows: Vec<usize>,
    pub observation: Array1<f64>,
    pub sigma: f64,
    pub lambda: f64,
    pub truth: Option<Array1<f64>>,
    /// Cached M * Psi (p x d).
    sensing: Array2<f64>,
}

impl AudioProblem {
    pub fn new(
        dictionary: Array2<f64>,
        measurement_rows: Vec<usize>,
        observation: Array1<f64>,
        sigma: f64,
        lambda: f64,
        truth: Option<Array1<f64>>,
    ) -> Result<Self> {
        let (ell, d) = dictionary.dim();
        let p = measurement_rows.len();
        if observation.len() != p {
            return Err(SoulError::DimensionMismatch {
                expected: p,
                got: observation.len(),
            });
        }
        if p >= ell {
            return Err(SoulError::InvalidArgument(format!(
                "expected p << ell, got p={p}, ell={ell}"
            )));
        }
        if measurement_rows.iter().any(|&r| r >= ell) {
            return Err(SoulError::InvalidArgument("measurement row out of range".into()));
        }
        if !(sigma > 0.0) || !(lambda > 0.0) {
            return Err(SoulError::InvalidArgument(
                "sigma and lambda must be positive".into(),
            ));
        }
        if let Some(t) = &truth {
            if t.len() != ell {
                return Err(SoulError::DimensionMismatch {
                    expected: ell,
                    got: t.len(),
                });
            }
        }
        let mut sensing = Array2::zeros((p, d));
        for (j, &r) in measurement_rows.iter().enumerate() {
            sensing.row_mut(j).assign(&dictionary.row(r));
        }
        Ok(Self {
            dictionary,
            measurement_rows,
            observation,
            sigma,
            lambda,
            truth,
            sensing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dictionary.ncols()
    }

    pub fn signal_len(&self) -> usize {
        self.dictionary.nrows()
    }

    pub fn n_measurements(&self) -> usize {
        self.measurement_rows.len()
    }

    /// The sensing operator M * Psi.
    pub fn sensing(&self) -> &Array2<f64> {
        &self.sensing
    }

    /// Largest squared singular value of the sensing operator, via power
    /// iteration (50 rounds).
    pub fn sensing_norm_sq(&self) -> f64 {
        let d = self.dim();
        let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
        let mut norm_sq = 0.0;
        for _ in 0..50 {
            let w = self.sensing.t().dot(&self.sensing.dot(&v));
            norm_sq = w.dot(&v);
            let n = w.dot(&w).sqrt();
            if n == 0.0 {
                return 0.0;
            }
            v = w / n;
        }
        norm_sq
    }
}

/// Normalizing integral z(theta) of the one-dimensional Huberized prior:
/// the Gaussian core over [-lambda, lambda] plus two exponential tails.
pub fn smoothed_laplace_z(theta: f64, lambda: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(SoulError::InvalidArgument(format!(
            "theta must be positive, got {theta}"
        )));
    }
    let core = (std::f64::consts::TAU / theta).sqrt() * erf(lambda * (theta / 2.0).sqrt());
    let tail = 2.0 / (theta * lambda) * (-theta * lambda * lambda / 2.0).exp();
    Ok(core + tail)
}

/// Derivative z'(theta) = -integral of h_lambda(u) exp(-theta h_lambda(u)).
/// The tail and core contributions partially cancel, leaving two terms.
pub fn smoothed_laplace_z_prime(theta: f64, lambda: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(SoulError::InvalidArgument(format!(
            "theta must be positive, got {theta}"
        )));
    }
    let core = 0.5 * std::f64::consts::TAU.sqrt() * theta.powf(-1.5)
        * erf(lambda * (theta / 2.0).sqrt());
    let tail = 2.0 / (theta * theta * lambda) * (-theta * lambda * lambda / 2.0).exp();
    Ok(-(core + tail))
}

/// d/dtheta log z(theta).
pub fn smoothed_laplace_dlogz(theta: f64, lambda: f64) -> Result<f64> {
    Ok(smoothed_laplace_z_prime(theta, lambda)? / smoothed_laplace_z(theta, lambda)?)
}

/// Gradient of log p(x | y, theta) in x.
pub fn acs_grad_x(x: &Array1<f64>, theta: f64, prob: &AudioProblem) -> Array1<f64> {
    let resid = &prob.observation - &prob.sensing.dot(x);
    let mut grad = prob.sensing.t().dot(&resid) / (prob.sigma * prob.sigma);
    grad.zip_mut_with(x, |g, xi| *g -= theta * huber_grad(*xi, prob.lambda));
    grad
}

/// Gradient of log p(x, y | theta) in theta, including the prior
/// normalizer term.
pub fn acs_grad_theta(x: &Array1<f64>, theta: f64, prob: &AudioProblem) -> Result<f64> {
    let h_sum: f64 = x.iter().map(|xi| huber(*xi, prob.lambda)).sum();
    let d = prob.dim() as f64;
    Ok(-h_sum - d * smoothed_laplace_dlogz(theta, prob.lambda)?)
}

/// Joint log density log p(x, y | theta) up to the fixed Gaussian
/// likelihood constant (which does not depend on theta or x-scale choices
/// relevant here it is included for completeness).
pub fn acs_log_joint(x: &Array1<f64>, theta: f64, prob: &AudioProblem) -> Result<f64> {
    let resid = &prob.observation - &prob.sensing.dot(x);
    let sq = resid.dot(&resid);
    let h_sum: f64 = x.iter().map(|xi| huber(*xi, prob.lambda)).sum();
    let d = prob.dim() as f64;
    let p = prob.n_measurements() as f64;
    Ok(
        -sq / (2.0 * prob.sigma * prob.sigma) - theta * h_sum
            - d * smoothed_laplace_z(theta, prob.lambda)?.ln()
            - 0.5 * p * (std::f64::consts::TAU * prob.sigma * prob.sigma).ln(),
    )
}

/// Outcome of the MAP solve.
#[derive(Debug, Clone)]
pub struct MapSolution {
    pub x_hat: Array1<f64>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

/// Minimizes ||y - M Psi x||^2/(2 sigma^2) + theta sum h_lambda(x_i) by
/// gradient descent with Armijo backtracking. The objective is smooth, so
/// plain descent suffices; the initial step is 1/L with L estimated by
/// power iteration.
pub fn map_reconstruct(
    prob: &AudioProblem,
    theta: f64,
    max_iter: usize,
    tol: f64,
) -> Result<MapSolution> {
    if theta < 0.0 {
        return Err(SoulError::InvalidArgument("theta must be non-negative".into()));
    }
    let sigma2 = prob.sigma * prob.sigma;
    let objective = |x: &Array1<f64>| -> f64 {
        let resid = &prob.observation - &prob.sensing.dot(x);
        resid.dot(&resid) / (2.0 * sigma2)
            + theta * x.iter().map(|xi| huber(*xi, prob.lambda)).sum::<f64>()
    };
    let gradient = |x: &Array1<f64>| -> Array1<f64> {
        let resid = &prob.sensing.dot(x) - &prob.observation;
        let mut g = prob.sensing.t().dot(&resid) / sigma2;
        g.zip_mut_with(x, |gi, xi| *gi += theta * huber_grad(*xi, prob.lambda));
        g
    };

    let lipschitz = prob.sensing_norm_sq() / sigma2 + theta;
    let step0 = 1.0 / lipschitz.max(f64::MIN_POSITIVE);
    let armijo = 1e-4;

    let mut x = Array1::<f64>::zeros(prob.dim());
    let mut f = objective(&x);
    let mut trace = vec![f];
    let mut converged = false;
    for _ in 0..max_iter {
        let g = gradient(&x);
        let gnorm = g.dot(&g).sqrt();
        if gnorm < tol {
            converged = true;
            break;
        }
        let mut step = step0;
        loop {
            let cand = &x - &(step * &g);
            let fc = objective(&cand);
            if fc <= f - armijo * step * gnorm * gnorm {
                x = cand;
                f = fc;
                break;
            }
            step *= 0.5;
            if step < 1e-20 * step0 {
                // no descent possible at machine precision
                converged = gnorm < tol.max(1e-8);
                trace.push(f);
                return Ok(MapSolution {
                    x_hat: x,
                    objective_trace: trace,
                    converged,
                });
            }
        }
        trace.push(f);
    }
    Ok(MapSolution {
        x_hat: x,
        objective_trace: trace,
        converged,
    })
}

/// Mean squared reconstruction error over signal samples.
pub fn mse(z_true: &Array1<f64>, z_hat: &Array1<f64>) -> f64 {
    let diff = z_true - z_hat;
    diff.dot(&diff) / z_true.len() as f64
}

/// Practitioner's default regularization: 0.1 ||(M Psi)' y||_inf / sigma^2.
pub fn theta_cs(prob: &AudioProblem) -> f64 {
    let corr = prob.sensing.t().dot(&prob.observation);
    let max_abs = corr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    0.1 * max_abs / (prob.sigma * prob.sigma)
}

/// [`Model`] wrapper: scalar theta restricted to a positive interval.
#[derive(Debug, Clone)]
pub struct AudioModel {
    pub problem: AudioProblem,
    domain: ParameterDomain,
}

impl AudioModel {
    pub fn new(problem: AudioProblem, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        if !(theta_lo > 0.0) {
            return Err(SoulError::InvalidArgument(
                "theta lower bound must be positive".into(),
            ));
        }
        let domain = ParameterDomain::uniform(1, theta_lo, theta_hi)?;
        Ok(Self { problem, domain })
    }
}

impl Model for AudioModel {
    fn dim_x(&self) -> usize {
        self.problem.dim()
    }
    fn dim_theta(&self) -> usize {
        1
    }
    fn domain(&self) -> &ParameterDomain {
        &self.domain
    }
    fn grad_x_log_posterior(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Array1<f64> {
        acs_grad_x(x, theta[0], &self.problem)
    }
    fn grad_theta_log_joint(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Array1<f64> {
        match acs_grad_theta(x, theta[0], &self.problem) {
            Ok(g) => ndarray::array![g],
            Err(_) => ndarray::array![f64::NAN],
        }
    }
    fn log_joint(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Option<f64> {
        acs_log_joint(x, theta[0], &self.problem).ok()
    }
}
