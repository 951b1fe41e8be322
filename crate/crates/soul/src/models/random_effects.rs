//! Logistic regression with a scalar-scaled Gaussian random effect. The
//! parameter is theta = (beta, sigma); beta is Huber-penalized, sigma is
//! projected onto [sigma_floor, +inf).

use ndarray::{Array1, Array2};

use crate::domain::ParameterDomain;
use crate::error::{Result, SoulError};
use crate::models::{huber_grad, log1pexp, sigmoid};
use crate::optimizer::Model;

pub const SIGMA_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct RandomEffectsProblem {
    /// d_y x p fixed-effect covariates.
    pub covariates: Array2<f64>,
    /// d_y x d random-effect loadings.
    pub loadings: Array2<f64>,
    pub labels: Array1<f64>,
    /// Huber knee of the penalty on beta.
    pub lambda: f64,
}

impl RandomEffectsProblem {
    pub fn new(
        covariates: Array2<f64>,
        loadings: Array2<f64>,
        labels: Array1<f64>,
        lambda: f64,
    ) -> Result<Self> {
        let d_y = covariates.nrows();
        if loadings.nrows() != d_y || labels.len() != d_y {
            return Err(SoulError::DimensionMismatch {
                expected: d_y,
                got: loadings.nrows().min(labels.len()),
            });
        }
        if labels.iter().any(|y| *y != 0.0 && *y != 1.0) {
            return Err(SoulError::InvalidArgument("labels must be 0/1".into()));
        }
        if !(lambda > 0.0) {
            return Err(SoulError::InvalidArgument("lambda must be positive".into()));
        }
        Ok(Self {
            covariates,
            loadings,
            labels,
            lambda,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.covariates.nrows()
    }

    /// Fixed-effect dimension p.
    pub fn dim_beta(&self) -> usize {
        self.covariates.ncols()
    }

    /// Random-effect dimension d.
    pub fn dim_x(&self) -> usize {
        self.loadings.ncols()
    }

    fn split<'a>(&self, theta: &'a Array1<f64>) -> (ndarray::ArrayView1<'a, f64>, f64) {
        let p = self.dim_beta();
        (theta.slice(ndarray::s![..p]), theta[p])
    }

    fn logits(&self, beta: &ndarray::ArrayView1<f64>, sigma: f64, x: &Array1<f64>) -> Array1<f64> {
        let mut logits = self.covariates.dot(beta);
        let zx = self.loadings.dot(x);
        logits.zip_mut_with(&zx, |l, z| *l += sigma * z);
        logits
    }
}

/// Gradient of log p(x | y, theta) in x: sigma Z'(y - s) - x.
pub fn re_grad_x(x: &Array1<f64>, theta: &Array1<f64>, prob: &RandomEffectsProblem) -> Array1<f64> {
    let (beta, sigma) = prob.split(theta);
    let logits = prob.logits(&beta, sigma, x);
    let resid = residuals(prob, &logits);
    let mut grad = prob.loadings.t().dot(&resid) * sigma;
    grad.zip_mut_with(x, |g, xi| *g -= xi);
    grad
}

/// Gradient of log p(x, y | theta) in theta = (beta, sigma).
pub fn re_grad_theta(
    x: &Array1<f64>,
    theta: &Array1<f64>,
    prob: &RandomEffectsProblem,
) -> Array1<f64> {
    let (beta, sigma) = prob.split(theta);
    let logits = prob.logits(&beta, sigma, x);
    let resid = residuals(prob, &logits);
    let grad_beta = prob.covariates.t().dot(&resid);
    let zx = prob.loadings.dot(x);
    let grad_sigma = resid.dot(&zx);
    let mut out = Array1::zeros(theta.len());
    out.slice_mut(ndarray::s![..prob.dim_beta()]).assign(&grad_beta);
    out[prob.dim_beta()] = grad_sigma;
    out
}

/// Gradient of the penalty g(theta) = sum_j h_lambda(beta_j): Huber
/// gradient on every regression coefficient, zero on sigma.
pub fn re_grad_penalty(theta: &Array1<f64>, lambda: f64) -> Array1<f64> {
    let p = theta.len() - 1;
    let mut out = Array1::zeros(theta.len());
    for j in 0..p {
        out[j] = huber_grad(theta[j], lambda);
    }
    out
}

/// Conditional log-likelihood plus the standard-Gaussian x prior.
pub fn re_log_joint(x: &Array1<f64>, theta: &Array1<f64>, prob: &RandomEffectsProblem) -> f64 {
    let (beta, sigma) = prob.split(theta);
    let logits = prob.logits(&beta, sigma, x);
    let loglik: f64 = prob
        .labels
        .iter()
        .zip(logits.iter())
        .map(|(y, u)| y * u - log1pexp(*u))
        .sum();
    let d = prob.dim_x() as f64;
    loglik - 0.5 * x.dot(x) - 0.5 * d * std::f64::consts::TAU.ln()
}

fn residuals(prob: &RandomEffectsProblem, logits: &Array1<f64>) -> Array1<f64> {
    Array1::from_iter(
        prob.labels
            .iter()
            .zip(logits.iter())
            .map(|(y, u)| y - sigmoid(*u)),
    )
}

/// [`Model`] wrapper: theta = (beta_1..beta_p, sigma), beta unbounded,
/// sigma on [SIGMA_FLOOR, +inf).
///
/// Caches the V beta product: within one SOUL iteration both gradients see
/// the same theta, and during chain burn-in theta is frozen entirely, so
/// the dominant d_y x p multiply is reused whenever beta is unchanged.
#[derive(Debug)]
pub struct RandomEffectsModel {
    pub problem: RandomEffectsProblem,
    domain: ParameterDomain,
    // owned transpose: gemv on a strided transposed view is far slower
    covariates_t: Array2<f64>,
    vbeta_cache: std::sync::Mutex<Option<(Array1<f64>, Array1<f64>)>>,
}

impl Clone for RandomEffectsModel {
    fn clone(&self) -> Self {
        Self {
            problem: self.problem.clone(),
            domain: self.domain.clone(),
            covariates_t: self.covariates_t.clone(),
            vbeta_cache: std::sync::Mutex::new(None),
        }
    }
}

impl RandomEffectsModel {
    pub fn new(problem: RandomEffectsProblem) -> Result<Self> {
        let p = problem.dim_beta();
        let mut lower = Array1::from_elem(p + 1, f64::NEG_INFINITY);
        let upper = Array1::from_elem(p + 1, f64::INFINITY);
        lower[p] = SIGMA_FLOOR;
        let domain = ParameterDomain::new(lower, upper)?;
        let covariates_t = problem.covariates.t().as_standard_layout().to_owned();
        Ok(Self {
            problem,
            domain,
            covariates_t,
            vbeta_cache: std::sync::Mutex::new(None),
        })
    }

    fn vbeta(&self, beta: &ndarray::ArrayView1<f64>) -> Array1<f64> {
        let mut cache = self.vbeta_cache.lock().unwrap();
        if let Some((b, v)) = cache.as_ref() {
            if b == beta {
                return v.clone();
            }
        }
        let v = self.problem.covariates.dot(beta);
        *cache = Some((beta.to_owned(), v.clone()));
        v
    }

    fn logits(&self, theta: &Array1<f64>, x: &Array1<f64>) -> (Array1<f64>, f64) {
        let (beta, sigma) = self.problem.split(theta);
        let mut logits = self.vbeta(&beta);
        let zx = self.problem.loadings.dot(x);
        logits.zip_mut_with(&zx, |l, z| *l += sigma * z);
        (logits, sigma)
    }
}

impl Model for RandomEffectsModel {
    fn dim_x(&self) -> usize {
        self.problem.dim_x()
    }
    fn dim_theta(&self) -> usize {
        self.problem.dim_beta() + 1
    }
    fn domain(&self) -> &ParameterDomain {
        &self.domain
    }
    fn grad_x_log_posterior(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Array1<f64> {
        let (logits, sigma) = self.logits(theta, x);
        let resid = residuals(&self.problem, &logits);
        let mut grad = self.problem.loadings.t().dot(&resid) * sigma;
        grad.zip_mut_with(x, |g, xi| *g -= xi);
        grad
    }
    fn grad_theta_log_joint(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Array1<f64> {
        let (logits, _) = self.logits(theta, x);
        let resid = residuals(&self.problem, &logits);
        let grad_beta = self.covariates_t.dot(&resid);
        let zx = self.problem.loadings.dot(x);
        let grad_sigma = resid.dot(&zx);
        let p = self.problem.dim_beta();
        let mut out = Array1::zeros(theta.len());
        out.slice_mut(ndarray::s![..p]).assign(&grad_beta);
        out[p] = grad_sigma;
        out
    }
    fn grad_penalty(&self, theta: &Array1<f64>) -> Array1<f64> {
        re_grad_penalty(theta, self.problem.lambda)
    }
    fn log_joint(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Option<f64> {
        Some(re_log_joint(x, theta, &self.problem))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use ndarray::array;

    fn toy(rng: &mut RngStream, d_y: usize, p: usize, d: usize) -> RandomEffectsProblem {
        let covariates = Array2::from_shape_fn((d_y, p), |_| rng.standard_normal());
        let loadings = Array2::from_shape_fn((d_y, d), |_| rng.standard_normal());
        let labels = Array1::from_iter((0..d_y).map(|_| f64::from(rng.uniform() < 0.5)));
        RandomEffectsProblem::new(covariates, loadings, labels, 0.8).unwrap()
    }

    #[test]
    fn grad_x_prior_only_stationary() {
        // sigma at the floor and x = 0: the residual term is O(sigma) ~ 0
        // and the prior term vanishes.
        let mut rng = RngStream::new(60, 0);
        let prob = toy(&mut rng, 10, 3, 2);
        let mut theta = Array1::zeros(4);
        theta[3] = 1e-12;
        let g = re_grad_x(&Array1::zeros(2), &theta, &prob);
        assert!(g.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn grad_x_single_datum_zero_residual() {
        // y_1 = s(logit) exactly -> gradient reduces to -x.
        let prob = RandomEffectsProblem {
            covariates: array![[1.0]],
            loadings: array![[2.0]],
            labels: array![0.5],
            lambda: 1.0,
        };
        let x = array![0.7];
        // logit = 0 * beta + sigma * 2 * 0.7; choose beta, sigma so logit = 0
        let theta = array![0.0, 0.0];
        // sigma = 0 puts logit at 0 where s = 0.5 = y
        let g = re_grad_x(&x, &theta, &prob);
        assert!((g[0] + 0.7).abs() < 1e-14);
    }

    #[test]
    fn grad_x_matches_finite_difference() {
        let mut rng = RngStream::new(61, 0);
        let prob = toy(&mut rng, 15, 4, 3);
        let h = 1e-5;
        for _ in 0..30 {
            let x = rng.standard_normal_vec(3);
            let mut theta = rng.standard_normal_vec(5);
            theta[4] = theta[4].abs() + 0.1;
            let g = re_grad_x(&x, &theta, &prob);
            for i in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd =
                    (re_log_joint(&xp, &theta, &prob) - re_log_joint(&xm, &theta, &prob)) / (2.0 * h);
                assert!((g[i] - fd).abs() / g[i].abs().max(1e-8) < 1e-5);
            }
        }
    }

    #[test]
    fn grad_theta_matches_finite_difference() {
        let mut rng = RngStream::new(62, 0);
        let prob = toy(&mut rng, 12, 3, 2);
        let h = 1e-5;
        for _ in 0..20 {
            let x = rng.standard_normal_vec(2);
            let mut theta = rng.standard_normal_vec(4);
            theta[3] = theta[3].abs() + 0.1;
            let g = re_grad_theta(&x, &theta, &prob);
            for i in 0..4 {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[i] += h;
                tm[i] -= h;
                let fd =
                    (re_log_joint(&x, &tp, &prob) - re_log_joint(&x, &tm, &prob)) / (2.0 * h);
                assert!(
                    (g[i] - fd).abs() / g[i].abs().max(1e-8) < 1e-5,
                    "coord {i}: {} vs {}",
                    g[i],
                    fd
                );
            }
        }
    }

    #[test]
    fn grad_theta_zero_when_residuals_vanish() {
        let prob = RandomEffectsProblem {
            covariates: array![[1.0, 0.0], [0.0, 1.0]],
            loadings: array![[1.0], [1.0]],
            labels: array![0.5, 0.5],
            lambda: 1.0,
        };
        // logits = 0 everywhere -> s = 0.5 = y
        let theta = array![0.0, 0.0, 0.5];
        let x = array![0.0];
        let g = re_grad_theta(&x, &theta, &prob);
        assert!(g.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn penalty_gradient() {
        let lambda = 0.5;
        // Huber gradient on each beta, zero on sigma
        let g = re_grad_penalty(&array![0.2, -2.0, 0.0, 1.3], lambda);
        assert_eq!(g, array![0.2, -0.5, 0.0, 0.0]);
        // zero beta -> zero penalty gradient
        let g = re_grad_penalty(&array![0.0, 0.0, 0.9], lambda);
        assert_eq!(g, array![0.0, 0.0, 0.0]);
    }

    #[test]
    fn model_domain_floors_sigma() {
        let mut rng = RngStream::new(63, 0);
        let model = RandomEffectsModel::new(toy(&mut rng, 5, 2, 2)).unwrap();
        let d = model.domain();
        assert!(!d.is_compact());
        let projected =
            crate::domain::project(&array![5.0, -5.0, -1.0], d).unwrap();
        assert_eq!(projected, array![5.0, -5.0, SIGMA_FLOOR]);
    }
}
