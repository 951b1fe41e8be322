//! Independent verification tools: truncated harmonic-mean marginal
//! likelihood estimation, gradient checking, the Foster-Lyapunov drift
//! checker and small diagnostics.

use ndarray::Array1;
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, SoulError};
use crate::kernel::ula_step;
use crate::models::sigmoid;
use crate::rng::RngStream;

/// Truncated harmonic-mean estimate of the log marginal likelihood.
///
/// The truncation ball is centered at the sample mean with radius chosen as
/// the `target_fraction` quantile of the distances, so the inside fraction
/// matches the target up to 1/n.
#[derive(Debug, Clone)]
pub struct ThmeEstimate {
    pub log_marginal: f64,
    pub n_inside: usize,
    pub radius: f64,
}

pub fn thme<F>(samples: &[Array1<f64>], log_joint: F, target_fraction: f64) -> Result<ThmeEstimate>
where
    F: Fn(&Array1<f64>) -> f64,
{
    if samples.len() < 50 {
        return Err(SoulError::InvalidArgument(format!(
            "thme needs at least 50 samples, got {}",
            samples.len()
        )));
    }
    if !(target_fraction > 0.0 && target_fraction < 1.0) {
        return Err(SoulError::InvalidArgument(
            "target_fraction must lie in (0,1)".into(),
        ));
    }
    let n = samples.len();
    let d = samples[0].len();

    let mut center = Array1::<f64>::zeros(d);
    for s in samples {
        center += s;
    }
    center /= n as f64;

    let mut dists: Vec<f64> = samples
        .iter()
        .map(|s| {
            let diff = s - &center;
            diff.dot(&diff).sqrt()
        })
        .collect();
    let mut sorted = dists.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = ((target_fraction * n as f64).ceil() as usize).clamp(1, n);
    let radius = sorted[k - 1];

    // log-sum-exp of -log p(beta_k, y | theta) over inside samples
    let mut terms = Vec::new();
    for (s, dist) in samples.iter().zip(dists.iter_mut()) {
        if *dist <= radius {
            let lj = log_joint(s);
            if !lj.is_finite() {
                return Err(SoulError::NonFinite {
                    context: "thme log_joint",
                    iteration: terms.len(),
                });
            }
            terms.push(-lj);
        }
    }
    if terms.is_empty() {
        return Err(SoulError::EmptyInput("no samples inside the truncation ball"));
    }
    let n_inside = terms.len();
    let lse = log_sum_exp(&terms);

    let log_vol = 0.5 * d as f64 * std::f64::consts::PI.ln() + d as f64 * radius.ln()
        - ln_gamma(d as f64 / 2.0 + 1.0);
    Ok(ThmeEstimate {
        log_marginal: (n as f64).ln() + log_vol - lse,
        n_inside,
        radius,
    })
}

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Chain controls for one grid point of a THME scan.
#[derive(Debug, Clone)]
pub struct ThmeChainConfig {
    pub gamma: f64,
    pub burnin: u64,
    pub n_samples: usize,
    /// Keep every `thin`-th ULA state.
    pub thin: u64,
    pub seed: u64,
    pub target_fraction: f64,
}

/// Grid scan of the log marginal likelihood with a quadratic fit.
#[derive(Debug, Clone)]
pub struct ThmeScan {
    pub theta_grid: Vec<f64>,
    pub log_marginal: Vec<f64>,
    pub n_inside: Vec<usize>,
    pub radius: Vec<f64>,
    /// Block-resampled standard error per grid point.
    pub std_error: Vec<f64>,
    /// (a2, a1, a0) least-squares coefficients of a2 t^2 + a1 t + a0.
    pub quad_coeffs: (f64, f64, f64),
    /// Fitted argmax -a1/(2 a2); absent when the fit is not concave.
    pub theta_star: Option<f64>,
}

/// Runs an independent ULA chain at each fixed grid theta and applies the
/// harmonic-mean estimator to the collected posterior samples.
pub fn thme_scan<M: crate::optimizer::Model>(
    model: &M,
    theta_grid: &[f64],
    x0: &Array1<f64>,
    chain: &ThmeChainConfig,
) -> Result<ThmeScan> {
    if theta_grid.len() < 5 {
        return Err(SoulError::InvalidArgument(
            "thme_scan needs at least 5 grid points".into(),
        ));
    }
    if theta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SoulError::InvalidArgument("theta grid must be sorted".into()));
    }
    if model.dim_theta() != 1 {
        return Err(SoulError::InvalidArgument(
            "thme_scan supports scalar-theta models".into(),
        ));
    }

    // grid points are independent chains on separate rng streams, so they
    // parallelize without changing the result
    use rayon::prelude::*;
    let per_point: Vec<Result<(f64, usize, f64, f64)>> = theta_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let theta = ndarray::array![t];
            let mut rng = RngStream::new(chain.seed, i as u64);
            let grad = |x: &Array1<f64>| model.grad_x_log_posterior(x, &theta);
            let mut x = x0.clone();
            for _ in 0..chain.burnin {
                x = ula_step(&x, grad, chain.gamma, &mut rng, i)?;
            }
            let mut samples = Vec::with_capacity(chain.n_samples);
            while samples.len() < chain.n_samples {
                for _ in 0..chain.thin {
                    x = ula_step(&x, grad, chain.gamma, &mut rng, i)?;
                }
                samples.push(x.clone());
            }
            let log_joint = |s: &Array1<f64>| {
                model
                    .log_joint(s, &theta)
                    .expect("thme_scan requires a model with log_joint")
            };
            let est = thme(&samples, log_joint, chain.target_fraction)?;

            // block estimates for a standard error
            let n_blocks = 8;
            let block = samples.len() / n_blocks;
            let se = if block >= 50 {
                let mut vals = Vec::new();
                for b in 0..n_blocks {
                    let chunk = &samples[b * block..(b + 1) * block];
                    if let Ok(e) = thme(chunk, log_joint, chain.target_fraction) {
                        vals.push(e.log_marginal);
                    }
                }
                stddev(&vals) / (vals.len().max(1) as f64).sqrt()
            } else {
                f64::NAN
            };
            Ok((est.log_marginal, est.n_inside, est.radius, se))
        })
        .collect();

    let mut log_marginal = Vec::with_capacity(theta_grid.len());
    let mut n_inside = Vec::new();
    let mut radius = Vec::new();
    let mut std_error = Vec::new();
    for r in per_point {
        let (lp, ni, rad, se) = r?;
        log_marginal.push(lp);
        n_inside.push(ni);
        radius.push(rad);
        std_error.push(se);
    }

    let quad_coeffs = quadratic_fit(theta_grid, &log_marginal);
    let theta_star = (quad_coeffs.0 < 0.0).then(|| -quad_coeffs.1 / (2.0 * quad_coeffs.0));
    Ok(ThmeScan {
        theta_grid: theta_grid.to_vec(),
        log_marginal,
        n_inside,
        radius,
        std_error,
        quad_coeffs,
        theta_star,
    })
}

fn stddev(vals: &[f64]) -> f64 {
    if vals.len() < 2 {
        return f64::NAN;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
}

/// Ordinary least squares fit of a2 x^2 + a1 x + a0.
pub fn quadratic_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    // normal equations for the Vandermonde [x^2, x, 1]
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
        t0 += y;
        t1 += x * y;
        t2 += x * x * y;
    }
    let a = [[s4, s3, s2], [s3, s2, s1], [s2, s1, n]];
    let b = [t2, t1, t0];
    let sol = solve3(a, b);
    (sol[0], sol[1], sol[2])
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    // Gaussian elimination with partial pivoting on a 3x3 system.
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Central-difference gradient check; returns the maximum relative error
/// over coordinates, with denominator max(|analytic|, 1e-8).
pub fn gradcheck<F, G>(f: F, grad: G, point: &Array1<f64>, h: f64) -> Result<f64>
where
    F: Fn(&Array1<f64>) -> f64,
    G: Fn(&Array1<f64>) -> Array1<f64>,
{
    if !(h > 0.0) {
        return Err(SoulError::InvalidArgument("h must be positive".into()));
    }
    let analytic = grad(point);
    let mut max_rel: f64 = 0.0;
    for i in 0..point.len() {
        let mut xp = point.clone();
        let mut xm = point.clone();
        xp[i] += h;
        xm[i] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        if !fp.is_finite() || !fm.is_finite() {
            return Err(SoulError::NonFinite {
                context: "gradcheck function value",
                iteration: i,
            });
        }
        let fd = (fp - fm) / (2.0 * h);
        let rel = (fd - analytic[i]).abs() / analytic[i].abs().max(1e-8);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

/// Mean absolute disagreement between binary label vectors.
pub fn prediction_error(y_test: &Array1<f64>, y_hat: &Array1<f64>) -> f64 {
    assert_eq!(y_test.len(), y_hat.len());
    y_test
        .iter()
        .zip(y_hat.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / y_test.len() as f64
}

/// Thresholded posterior-mean predictive probability: label 1 when the
/// average of s(v' beta) over posterior samples reaches 0.5.
pub fn predictive_labels(
    beta_samples: &[Array1<f64>],
    test_covariates: &ndarray::Array2<f64>,
) -> Array1<f64> {
    let n = beta_samples.len() as f64;
    let mut probs = Array1::<f64>::zeros(test_covariates.nrows());
    for beta in beta_samples {
        let logits = test_covariates.dot(beta);
        probs.zip_mut_with(&logits, |p, u| *p += sigmoid(*u) / n);
    }
    probs.mapv(|p| f64::from(p >= 0.5))
}

/// Tail-growth parameters of the drift condition.
#[derive(Debug, Clone, Copy)]
pub struct TailParams {
    pub m1: f64,
    pub m2: f64,
    pub c: f64,
    pub r1: f64,
}

/// Constants of the exponential drift inequality derived from the tail
/// parameters, dimension and step cap.
#[derive(Debug, Clone, Copy)]
pub struct DriftConstants {
    pub m1_tilde: f64,
    pub lambda_e: f64,
    pub b_e: f64,
    pub r_e: f64,
}

pub fn drift_constants(tail: &TailParams, gamma_bar: f64, dim: usize) -> DriftConstants {
    let m1t = tail.m1 / 4.0;
    let d = dim as f64;
    let lambda_e = (-m1t * m1t * (std::f64::consts::SQRT_2 - 1.0)).exp();
    let r_e = 1.0_f64
        .max(2.0 * (d + tail.c) / tail.m1)
        .max(tail.r1);
    let b_e = m1t
        * (d + tail.c + std::f64::consts::SQRT_2 * m1t)
        * (m1t * ((d + tail.c + m1t) * gamma_bar + (1.0 + r_e * r_e).sqrt())).exp();
    DriftConstants {
        m1_tilde: m1t,
        lambda_e,
        b_e,
        r_e,
    }
}

/// Exponential Lyapunov function exp(m1_tilde sqrt(1 + ||x||^2)).
pub fn lyapunov(x: &Array1<f64>, m1_tilde: f64) -> f64 {
    (m1_tilde * (1.0 + x.dot(x)).sqrt()).exp()
}

#[derive(Debug, Clone)]
pub struct DriftPoint {
    pub x_norm: f64,
    pub lhs: f64,
    pub std_error: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct DriftReport {
    pub constants: DriftConstants,
    pub gamma: f64,
    pub points: Vec<DriftPoint>,
    pub all_pass: bool,
}

/// Monte-Carlo check of the one-step drift inequality
/// E[V(X')] <= lambda_e^gamma V(x) + b_e gamma 1{||x|| < r_e}, with a
/// 3-standard-error allowance on the estimate.
pub fn drift_check<G>(
    grad_log_target: G,
    tail: &TailParams,
    gamma: f64,
    gamma_bar: f64,
    test_points: &[Array1<f64>],
    n_mc: usize,
    seed: u64,
) -> Result<DriftReport>
where
    G: Fn(&Array1<f64>) -> Array1<f64> + Sync,
{
    if !(gamma > 0.0) || gamma > gamma_bar || !(gamma_bar < 1.0f64.min(2.0 * tail.m2) + 1e-15) {
        return Err(SoulError::InvalidArgument(format!(
            "need 0 < gamma <= gamma_bar <= min(1, 2 m2); got gamma={gamma}, gamma_bar={gamma_bar}"
        )));
    }
    let dim = test_points
        .first()
        .ok_or(SoulError::EmptyInput("drift test points"))?
        .len();
    let k = drift_constants(tail, gamma_bar, dim);

    let mut points = Vec::with_capacity(test_points.len());
    for (i, x) in test_points.iter().enumerate() {
        let mut rng = RngStream::new(seed, i as u64);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n_mc {
            let next = ula_step(x, &grad_log_target, gamma, &mut rng, i)?;
            let v = lyapunov(&next, k.m1_tilde);
            sum += v;
            sumsq += v * v;
        }
        let n = n_mc as f64;
        let lhs = sum / n;
        let var = (sumsq / n - lhs * lhs).max(0.0);
        let std_error = (var / n).sqrt();
        let x_norm = x.dot(x).sqrt();
        let inside = x_norm < k.r_e;
        let rhs = k.lambda_e.powf(gamma) * lyapunov(x, k.m1_tilde)
            + if inside { k.b_e * gamma } else { 0.0 };
        let pass = lhs <= rhs + 3.0 * std_error;
        points.push(DriftPoint {
            x_norm,
            lhs,
            std_error,
            rhs,
            pass,
        });
    }
    let all_pass = points.iter().all(|p| p.pass);
    Ok(DriftReport {
        constants: k,
        gamma,
        points,
        all_pass,
    })
}

/// Discrete concavity test: all second differences of `fs` over the sorted
/// grid `xs` must be at most `tolerance`.
pub fn concavity_check(xs: &[f64], fs: &[f64], tolerance: f64) -> Result<bool> {
    if xs.len() < 3 || xs.len() != fs.len() {
        return Err(SoulError::InvalidArgument(
            "concavity_check needs >= 3 matched points".into(),
        ));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SoulError::InvalidArgument("grid must be strictly sorted".into()));
    }
    for i in 1..xs.len() - 1 {
        // divided second difference, valid for non-uniform grids
        let d1 = (fs[i] - fs[i - 1]) / (xs[i] - xs[i - 1]);
        let d2 = (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i]);
        let second = (d2 - d1) / (0.5 * (xs[i + 1] - xs[i - 1]));
        if second > tolerance {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn quadratic_fit_exact() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.5 - 2.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x * x + 3.0 * x + 1.0).collect();
        let (a2, a1, a0) = quadratic_fit(&xs, &ys);
        assert!((a2 + 2.0).abs() < 1e-9);
        assert!((a1 - 3.0).abs() < 1e-9);
        assert!((a0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gradcheck_quadratic_is_exact() {
        let f = |x: &Array1<f64>| x.dot(x);
        let g = |x: &Array1<f64>| 2.0 * x;
        let err = gradcheck(f, g, &array![1.0, -2.0, 0.5], 1e-4).unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn gradcheck_flags_wrong_gradient() {
        let f = |x: &Array1<f64>| x.dot(x);
        let g = |x: &Array1<f64>| 4.0 * x; // scaled by 2
        let err = gradcheck(f, g, &array![1.0, 2.0], 1e-4).unwrap();
        // |2x - 4x| / |4x| = 1/2
        assert!((err - 0.5).abs() < 1e-6, "{err}");
    }

    #[test]
    fn gradcheck_flags_one_percent_perturbation() {
        let f = |x: &Array1<f64>| (x[0] * 1.3).sin() + x[1] * x[1];
        let g = |x: &Array1<f64>| array![1.01 * 1.3 * (x[0] * 1.3).cos(), 2.0 * x[1]];
        let err = gradcheck(f, g, &array![0.7, -0.4], 1e-5).unwrap();
        assert!(err >= 5e-3, "{err}");
    }

    #[test]
    fn thme_uniform_density_recovers_unit_mass() {
        // Uniform on [0,1]^2: p(beta, y) = 1 inside, so the estimator must
        // recover total mass 1.
        let mut rng = RngStream::new(70, 0);
        let samples: Vec<Array1<f64>> = (0..100_000)
            .map(|_| array![rng.uniform(), rng.uniform()])
            .collect();
        let est = thme(&samples, |_| 0.0, 0.4).unwrap();
        assert!(
            est.log_marginal.abs() < 0.05_f64.ln().abs().min(0.05),
            "log_marginal = {}",
            est.log_marginal
        );
        let frac = est.n_inside as f64 / samples.len() as f64;
        assert!((frac - 0.4).abs() < 0.01);
    }

    #[test]
    fn thme_conjugate_gaussian() {
        // prior N(theta, s2), likelihood y ~ N(beta, 1): marginal is
        // N(y; theta, 1 + s2). Exact posterior sampling.
        let (theta, s2, y) = (0.7, 2.0, 1.9);
        let post_var: f64 = 1.0 / (1.0 + 1.0 / s2);
        let post_mean = post_var * (y + theta / s2);
        let mut rng = RngStream::new(71, 0);
        let samples: Vec<Array1<f64>> = (0..100_000)
            .map(|_| array![post_mean + post_var.sqrt() * rng.standard_normal()])
            .collect();
        let log_joint = |b: &Array1<f64>| {
            let tau = std::f64::consts::TAU;
            -0.5 * (b[0] - theta).powi(2) / s2 - 0.5 * (tau * s2).ln()
                - 0.5 * (y - b[0]).powi(2)
                - 0.5 * tau.ln()
        };
        let est = thme(&samples, log_joint, 0.4).unwrap();
        let var = 1.0 + s2;
        let analytic =
            -0.5 * (y - theta).powi(2) / var - 0.5 * (std::f64::consts::TAU * var).ln();
        assert!(
            (est.log_marginal - analytic).abs() < 0.05,
            "{} vs {}",
            est.log_marginal,
            analytic
        );
    }

    #[test]
    fn thme_log_space_equals_linear_space() {
        let mut rng = RngStream::new(72, 0);
        let samples: Vec<Array1<f64>> =
            (0..500).map(|_| array![rng.standard_normal()]).collect();
        let log_joint = |b: &Array1<f64>| -0.5 * b[0] * b[0];
        let est = thme(&samples, log_joint, 0.4).unwrap();
        // linear-space recomputation on this well-scaled problem
        let mut center = 0.0;
        for s in &samples {
            center += s[0];
        }
        center /= samples.len() as f64;
        let mut dists: Vec<f64> = samples.iter().map(|s| (s[0] - center).abs()).collect();
        let mut sorted = dists.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let k = (0.4 * samples.len() as f64).ceil() as usize;
        let r = sorted[k - 1];
        let mut denom = 0.0;
        for (s, d) in samples.iter().zip(dists.iter_mut()) {
            if *d <= r {
                denom += 1.0 / (-0.5 * s[0] * s[0]).exp();
            }
        }
        let linear = (samples.len() as f64 * 2.0 * r / denom).ln();
        assert!((est.log_marginal - linear).abs() < 1e-10 * linear.abs().max(1.0));
    }

    #[test]
    fn thme_invariant_to_sample_order() {
        let mut rng = RngStream::new(73, 0);
        let mut samples: Vec<Array1<f64>> =
            (0..2000).map(|_| rng.standard_normal_vec(2)).collect();
        let log_joint = |b: &Array1<f64>| -0.5 * b.dot(b);
        let a = thme(&samples, log_joint, 0.4).unwrap();
        samples.reverse();
        let perm = rng.permutation(samples.len());
        let shuffled: Vec<Array1<f64>> = perm.iter().map(|&i| samples[i].clone()).collect();
        let b = thme(&shuffled, log_joint, 0.4).unwrap();
        // summation order changes only the last few ulps
        assert!((a.log_marginal - b.log_marginal).abs() < 1e-12 * a.log_marginal.abs());
    }

    #[test]
    fn thme_rejects_small_input() {
        let samples = vec![array![0.0]; 10];
        assert!(thme(&samples, |_| 0.0, 0.4).is_err());
    }

    #[test]
    fn prediction_error_basics() {
        let y = array![1.0, 0.0, 1.0, 1.0];
        assert_eq!(prediction_error(&y, &y), 0.0);
        let flipped = y.mapv(|v| 1.0 - v);
        assert_eq!(prediction_error(&y, &flipped), 1.0);
    }

    #[test]
    fn predictive_labels_thresholds_mean_probability() {
        let betas = vec![array![1.0], array![-3.0]];
        let cov = Array2::from_shape_vec((2, 1), vec![1.0, -1.0]).unwrap();
        // row 1: mean of s(1), s(-3) = (0.731 + 0.047)/2 < 0.5 -> 0
        // row 2: mean of s(-1), s(3) = (0.269 + 0.953)/2 > 0.5 -> 1
        let labels = predictive_labels(&betas, &cov);
        assert_eq!(labels, array![0.0, 1.0]);
    }

    #[test]
    fn drift_constants_match_independent_arithmetic() {
        let tail = TailParams {
            m1: 1.0,
            m2: 0.5,
            c: 0.0,
            r1: 2.0,
        };
        let k = drift_constants(&tail, 0.5, 2);
        // independently coded expressions
        let m1t = 0.25;
        assert_eq!(k.m1_tilde, m1t);
        assert!((k.lambda_e - (-(0.25f64 * 0.25) * (2f64.sqrt() - 1.0)).exp()).abs() < 1e-15);
        assert_eq!(k.r_e, 4.0); // max(1, 2*(2+0)/1, 2)
        let b = m1t * (2.0 + 0.0 + 2f64.sqrt() * m1t)
            * (m1t * ((2.0 + 0.0 + m1t) * 0.5 + 17f64.sqrt())).exp();
        assert!((k.b_e - b).abs() < 1e-12 * b);
    }

    #[test]
    fn gaussian_l2_params_verified_by_hand() {
        // For U = ||x||^2/2: <grad U, x> = ||x||^2 and the claimed tail
        // inequality with (m1, m2, c, R1) = (1, 1/2, 0, 2) reads
        // ||x||^2 >= ||x|| 1{||x||>2} + ||x||^2/2. Check on a grid.
        for i in 0..400 {
            let r = i as f64 * 0.05;
            let lhs = r * r;
            let rhs = if r > 2.0 { r } else { 0.0 } + r * r / 2.0;
            assert!(lhs >= rhs - 1e-12, "r={r}");
        }
    }

    #[test]
    fn drift_holds_for_gaussian_target() {
        let tail = TailParams {
            m1: 1.0,
            m2: 0.5,
            c: 0.0,
            r1: 2.0,
        };
        let points = vec![array![0.0, 0.0], array![5.0, 0.0]];
        let report = drift_check(
            |x: &Array1<f64>| -x.clone(),
            &tail,
            0.1,
            0.1,
            &points,
            20_000,
            5,
        )
        .unwrap();
        assert!(report.all_pass, "{:?}", report.points);
    }

    #[test]
    fn drift_rejects_gamma_out_of_range() {
        let tail = TailParams {
            m1: 1.0,
            m2: 0.4,
            c: 0.0,
            r1: 1.0,
        };
        let pts = vec![array![0.0]];
        assert!(
            drift_check(|x: &Array1<f64>| -x.clone(), &tail, 0.9, 0.9, &pts, 10, 0).is_err()
        );
    }

    #[test]
    fn concavity_check_basics() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 - 3.0).collect();
        let neg: Vec<f64> = xs.iter().map(|x| -x * x).collect();
        let pos: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(concavity_check(&xs, &neg, 1e-9).unwrap());
        assert!(!concavity_check(&xs, &pos, 1e-9).unwrap());
        let mut unsorted = xs.clone();
        unsorted.swap(0, 1);
        assert!(concavity_check(&unsorted, &neg, 1e-9).is_err());
    }
}
