//! The SOUL outer loop: projected stochastic approximation driven by
//! warm-started ULA chains.

use ndarray::Array1;
use rayon::prelude::*;

use crate::domain::{project, ParameterDomain, RunTrace, WeightedAverage};
use crate::error::{Result, SoulError};
use crate::kernel::{run_chain, ula_step};
use crate::rng::RngStream;
use crate::schedules::ScheduleSet;

/// Latent-variable model as seen by the optimizer.
///
/// `grad_x_log_posterior` drives the ULA chain, `grad_theta_log_joint`
/// forms the stochastic gradient of the marginal log-likelihood, and
/// `grad_penalty` is the gradient of the penalty g. `log_joint` is needed
/// only by the harmonic-mean verification tools.
pub trait Model: Sync {
    fn dim_x(&self) -> usize;
    fn dim_theta(&self) -> usize;
    fn domain(&self) -> &ParameterDomain;

    fn grad_x_log_posterior(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Array1<f64>;
    fn grad_theta_log_joint(&self, x: &Array1<f64>, theta: &Array1<f64>) -> Array1<f64>;

    fn grad_penalty(&self, theta: &Array1<f64>) -> Array1<f64> {
        Array1::zeros(theta.len())
    }

    fn log_joint(&self, _x: &Array1<f64>, _theta: &Array1<f64>) -> Option<f64> {
        None
    }
}

/// Run controls for a single SOUL run.
#[derive(Debug, Clone)]
pub struct SoulConfig {
    /// Number of averaged iterations N.
    pub n_iterations: u64,
    /// ULA steps taken at fixed theta0 before any parameter update.
    pub chain_burnin: u64,
    /// Leading optimizer iterations excluded from the weighted average.
    pub theta_warmup: u64,
    pub seed: u64,
    pub stream_id: u64,
    /// Trace thinning: record every k-th iteration.
    pub record_every: u64,
    /// Also retain the thinned latent chain states.
    pub retain_latent: bool,
}

impl SoulConfig {
    pub fn new(n_iterations: u64, seed: u64) -> Self {
        Self {
            n_iterations,
            chain_burnin: 0,
            theta_warmup: 0,
            seed,
            stream_id: 0,
            record_every: 1,
            retain_latent: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 {
            return Err(SoulError::InvalidArgument("n_iterations must be >= 1".into()));
        }
        if self.record_every == 0 {
            return Err(SoulError::InvalidArgument("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Executes Algorithm SOUL: chain burn-in at fixed theta0, then
/// `theta_warmup + N` projected SA iterations with the chain warm-started
/// across iterations. Warm-up iterations advance the schedule index but are
/// excluded from the weighted average.
pub fn soul_run<M: Model>(
    model: &M,
    theta0: &Array1<f64>,
    x0: &Array1<f64>,
    schedules: &ScheduleSet,
    config: &SoulConfig,
) -> Result<RunTrace> {
    config.validate()?;
    let domain = model.domain();
    if theta0.len() != domain.dim() || theta0.len() != model.dim_theta() {
        return Err(SoulError::DimensionMismatch {
            expected: model.dim_theta(),
            got: theta0.len(),
        });
    }
    if x0.len() != model.dim_x() {
        return Err(SoulError::DimensionMismatch {
            expected: model.dim_x(),
            got: x0.len(),
        });
    }
    if !domain.contains(theta0) {
        return Err(SoulError::InvalidArgument(
            "theta0 lies outside the parameter domain".into(),
        ));
    }

    let start = std::time::Instant::now();
    let mut rng = RngStream::new(config.seed, config.stream_id);
    let mut theta = theta0.clone();
    let mut x = x0.clone();

    // Phase (i): warm up the Markov chain at fixed theta0.
    let gamma1 = schedules.eval_gamma(1)?;
    for k in 0..config.chain_burnin {
        x = ula_step(
            &x,
            |x| model.grad_x_log_posterior(x, &theta),
            gamma1,
            &mut rng,
            k as usize,
        )?;
    }

    let total = config.theta_warmup + config.n_iterations;
    let mut avg = WeightedAverage::new(theta.len());
    let mut iterations = Vec::new();
    let mut thetas = Vec::new();
    let mut averaged = Vec::new();
    let mut deltas = Vec::new();
    let mut retained = config.retain_latent.then(Vec::new);

    // Phase (ii): projected SA updates driven by warm-started chains.
    for n in 1..=total {
        let gamma = schedules.eval_gamma(n)?;
        let m = schedules.eval_batch(n)?;
        let delta = schedules.eval_delta(n)?;

        let (samples, last) = run_chain(
            &x,
            |x| model.grad_x_log_posterior(x, &theta),
            gamma,
            m,
            &mut rng,
        )
        .map_err(|e| annotate_iteration(e, n))?;
        x = last;

        let mut drift = Array1::<f64>::zeros(theta.len());
        for s in &samples {
            drift += &model.grad_theta_log_joint(s, &theta);
        }
        drift /= m as f64;
        if !drift.iter().all(|v| v.is_finite()) {
            return Err(SoulError::NonFinite {
                context: "theta drift",
                iteration: n as usize,
            });
        }

        let penalty = model.grad_penalty(&theta);
        let proposal = &theta + delta * (&drift - &penalty);
        theta = project(&proposal, domain)?;

        let in_average = n > config.theta_warmup;
        if in_average {
            avg.push(&theta, delta)?;
        }

        if n % config.record_every == 0 || n == total {
            iterations.push(n as usize);
            thetas.push(theta.clone());
            averaged.push(avg.value().unwrap_or_else(|| theta.clone()));
            deltas.push(delta);
            if let Some(r) = retained.as_mut() {
                r.push(x.clone());
            }
        }
    }

    let theta_hat = avg.value().ok_or(SoulError::EmptyInput("no averaged iterates"))?;
    Ok(RunTrace {
        iterations,
        thetas,
        averaged,
        deltas,
        theta_hat,
        final_latent: x,
        retained_latent: retained,
        seed: config.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn annotate_iteration(e: SoulError, n: u64) -> SoulError {
    match e {
        SoulError::NonFinite { context, .. } => SoulError::NonFinite {
            context,
            iteration: n as usize,
        },
        other => other,
    }
}

/// Runs `n_replicates` independent copies of `soul_run` on streams
/// `(seed, 0..n_replicates)`. Results are returned in stream order; a
/// failing replicate does not abort the batch.
pub fn replicate<M: Model>(
    model: &M,
    theta0: &Array1<f64>,
    x0: &Array1<f64>,
    schedules: &ScheduleSet,
    config: &SoulConfig,
    n_replicates: u64,
) -> Vec<Result<Array1<f64>>> {
    (0..n_replicates)
        .into_par_iter()
        .map(|i| {
            let mut cfg = config.clone();
            cfg.stream_id = i;
            soul_run(model, theta0, x0, schedules, &cfg).map(|t| t.theta_hat)
        })
        .collect()
}
