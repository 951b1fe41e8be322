//! Conjugate Gaussian toy model: prior x ~ N(theta, sigma2), likelihood
//! y ~ N(x, 1). The marginal is N(theta, 1 + sigma2), so the maximum
//! marginal likelihood estimate is theta* = y exactly.

use ndarray::{array, Array1};

use crate::domain::ParameterDomain;
use crate::error::Result;
use crate::optimizer::Model;

#[derive(Debug, Clone)]
pub struct ToyGaussian {
    pub y: f64,
    pub sigma2: f64,
    domain: ParameterDomain,
}

impl ToyGaussian {
    pub fn new(y: f64, sigma2: f64, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        let domain = ParameterDomain::uniform(1, theta_lo, theta_hi)?;
        Ok(Self { y, sigma2, domain })
    }

    /// Maximizer of the marginal likelihood.
    pub fn theta_star(&self) -> f64 {
        self.y
    }

    /// Analytic log marginal likelihood log N(y; theta, 1 + sigma2).
    pub fn log_marginal(&self, theta: f64) -> f64 {
        let var = 1.0 + self.sigma2;
        -0.5 * (self.y - theta).powi(2) / var - 0.5 * (std::f64::consts::TAU * var).ln()
    }
}

impl Model for ToyGaussian {
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_theta(&self) -> usize {
        1
    }
    fn domain(&self) -> &ParameterDomain {
        &self.domain
    }
    fn grad_x_log_posterior(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Array1<f64> {
        array![-(x[0] - theta[0]) / self.sigma2 - (x[0] - self.y)]
    }
    fn grad_theta_log_joint(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Array1<f64> {
        array![(x[0] - theta[0]) / self.sigma2]
    }
    fn log_joint(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Option<f64> {
        let tau = std::f64::consts::TAU;
        Some(
            -0.5 * (x[0] - theta[0]).powi(2) / self.sigma2 - 0.5 * (tau * self.sigma2).ln()
                - 0.5 * (self.y - x[0]).powi(2)
                - 0.5 * tau.ln(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_log_joint() {
        let m = ToyGaussian::new(1.3, 2.0, -100.0, 100.0).unwrap();
        let x = array![0.4];
        let th = array![-0.6];
        let h = 1e-6;
        let fd_x = (m.log_joint(&array![x[0] + h], &th).unwrap()
            - m.log_joint(&array![x[0] - h], &th).unwrap())
            / (2.0 * h);
        assert!((fd_x - m.grad_x_log_posterior(&x, &th)[0]).abs() < 1e-8);
        let fd_t = (m.log_joint(&x, &array![th[0] + h]).unwrap()
            - m.log_joint(&x, &array![th[0] - h]).unwrap())
            / (2.0 * h);
        assert!((fd_t - m.grad_theta_log_joint(&x, &th)[0]).abs() < 1e-8);
    }

    #[test]
    fn marginal_peaks_at_y() {
        let m = ToyGaussian::new(0.8, 5.0, -100.0, 100.0).unwrap();
        assert!(m.log_marginal(0.8) > m.log_marginal(0.7));
        assert!(m.log_marginal(0.8) > m.log_marginal(0.9));
    }
}
