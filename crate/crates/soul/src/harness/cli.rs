//! Command-line interface: experiment runs, replication, scans and the
//! verification subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::{array, Array1};
use rayon::prelude::*;

use crate::domain::RunTrace;
use crate::error::{Result, SoulError};
use crate::harness::config::{Experiment, ExperimentConfig};
use crate::harness::data::{
    gen_audio_problem, gen_logistic_dataset, gen_random_effects_problem, load_csv_dataset,
};
use crate::models::audio::{self, AudioModel};
use crate::models::blr::BlrModel;
use crate::models::random_effects::RandomEffectsModel;
use crate::models::ToyGaussian;
use crate::optimizer::{replicate, soul_run, Model, SoulConfig};
use crate::schedules::{check_fixed_batch, check_increasing_batch, ScheduleSet};
use crate::validation::{drift_check, gradcheck, thme_scan, TailParams, ThmeChainConfig};

#[derive(Parser)]
#[command(name = "soul", about = "Stochastic optimization via unadjusted Langevin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one SOUL optimization from a config file.
    Run(RunArgs),
    /// Run many independent replicates and histogram the estimates.
    Replicate(ReplicateArgs),
    /// Scan the marginal likelihood over a theta grid.
    #[command(name = "thme-scan")]
    ThmeScan(ThmeScanArgs),
    /// Finite-difference checks of every model gradient.
    Gradcheck(GradcheckArgs),
    /// Verify step-size schedule admissibility.
    #[command(name = "check-schedule")]
    CheckSchedule(CheckScheduleArgs),
    /// Monte-Carlo check of the Langevin drift inequality.
    #[command(name = "drift-check")]
    DriftCheck(DriftCheckArgs),
    /// Write synthetic problem files.
    #[command(name = "gen-data")]
    GenData(GenDataArgs),
    /// Sweep MAP reconstruction error over a log-grid of theta.
    #[command(name = "map-sweep")]
    MapSweep(MapSweepArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplicateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of replicates; overrides the config's `replicates` key.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 30)]
    bins: usize,
}

#[derive(Args)]
struct ThmeScanArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    theta_min: f64,
    #[arg(long)]
    theta_max: f64,
    #[arg(long, default_value_t = 21)]
    points: usize,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
}

#[derive(Args)]
struct CheckScheduleArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    /// Check the fixed-batch criterion instead of the increasing-batch one.
    #[arg(long)]
    fixed_batch: bool,
}

#[derive(Args)]
struct DriftCheckArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    gamma_bar: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    n_mc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Comma-separated list of test-point norms.
    #[arg(long, default_value = "0,1,2,5,10")]
    norms: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenDataArgs {
    /// One of: logistic, audio, random-effects.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct MapSweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    theta_min: f64,
    #[arg(long)]
    theta_max: f64,
    #[arg(long, default_value_t = 20)]
    points: usize,
}

/// Entry point; returns the process exit code (0 success, 1 validation
/// failure, 2 usage error).
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version through the same error path
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Replicate(a) => cmd_replicate(&a),
        Command::ThmeScan(a) => cmd_thme_scan(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a),
        Command::CheckSchedule(a) => Ok(cmd_check_schedule(&a)),
        Command::DriftCheck(a) => cmd_drift_check(&a),
        Command::GenData(a) => cmd_gen_data(&a),
        Command::MapSweep(a) => cmd_map_sweep(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SoulError::InvalidArgument(ref msg) if msg.contains("missing config key") => 2,
                SoulError::InvalidArgument(ref msg) if msg.contains("unknown") => 2,
                _ => 1,
            }
        }
    }
}

/// 17-significant-digit float formatting used by every CSV writer.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(header.as_bytes())?;
    f.write_all(b"\n")?;
    for row in rows {
        f.write_all(row.join(",").as_bytes())?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

fn out_dir(cfg: &ExperimentConfig, flag: &Option<PathBuf>) -> PathBuf {
    if let Some(p) = flag {
        p.clone()
    } else if let Ok(p) = cfg.get_str("out_dir") {
        PathBuf::from(p)
    } else {
        PathBuf::from(".")
    }
}

fn schedules_from(cfg: &ExperimentConfig) -> Result<ScheduleSet> {
    let s = ScheduleSet::new(
        cfg.get_f64("delta0")?,
        cfg.get_f64("a")?,
        cfg.get_f64("gamma0")?,
        cfg.get_f64_or("b", 0.0)?,
        cfg.get_u64_or("m0", 1)?,
        cfg.get_f64_or("c", 0.0)?,
    )?;
    if cfg.contains("gamma_bar") {
        s.with_gamma_bar(cfg.get_f64("gamma_bar")?)
    } else {
        Ok(s)
    }
}

fn soul_config_from(cfg: &ExperimentConfig) -> Result<SoulConfig> {
    let n = cfg.get_u64("n_iterations")?;
    let mut sc = SoulConfig::new(n, cfg.get_u64("seed")?);
    sc.chain_burnin = cfg.get_u64_or("chain_burnin", 0)?;
    sc.theta_warmup = cfg.get_u64_or("theta_warmup", 0)?;
    sc.record_every = cfg.get_u64_or("record_every", (n / 2000).max(1))?;
    Ok(sc)
}

fn warn_if_schedule_inadmissible(cfg: &ExperimentConfig) -> Result<()> {
    let (a, b, c) = (
        cfg.get_f64("a")?,
        cfg.get_f64_or("b", 0.0)?,
        cfg.get_f64_or("c", 0.0)?,
    );
    let fixed_batch = c == 0.0;
    if fixed_batch {
        let v = check_fixed_batch(a, b);
        if !v.valid {
            eprintln!(
                "warning: fixed-batch schedule outside the admissible region \
                 (need a > 5/6 and b in ({:.6}, {:.6})); running anyway",
                v.b_interval.0, v.b_interval.1
            );
        }
    } else {
        let v = check_increasing_batch(a, b, c);
        if !v.valid {
            eprintln!(
                "warning: increasing-batch schedule violates {:?}; running anyway",
                v.violated
            );
        }
    }
    Ok(())
}

struct Prepared<M> {
    model: M,
    theta0: Array1<f64>,
    x0: Array1<f64>,
}

fn prepare_toy(cfg: &ExperimentConfig) -> Result<Prepared<ToyGaussian>> {
    let y = cfg.get_f64_or("y", 1.0)?;
    let sigma2 = cfg.get_f64_or("sigma2", 1.0)?;
    let lo = cfg.get_f64_or("theta_lo", -100.0)?;
    let hi = cfg.get_f64_or("theta_hi", 100.0)?;
    Ok(Prepared {
        model: ToyGaussian::new(y, sigma2, lo, hi)?,
        theta0: array![cfg.get_f64_or("theta0", 0.0)?],
        x0: array![cfg.get_f64_or("x0", 0.0)?],
    })
}

fn prepare_blr(cfg: &ExperimentConfig) -> Result<Prepared<BlrModel>> {
    let data = load_csv_dataset(
        Path::new(cfg.get_str("data_in")?),
        cfg.get_f64_or("sigma2", 5.0)?,
    )?;
    let d = data.dim();
    let lo = cfg.get_f64_or("theta_lo", -100.0)?;
    let hi = cfg.get_f64_or("theta_hi", 100.0)?;
    Ok(Prepared {
        model: BlrModel::new(data, lo, hi)?,
        theta0: array![cfg.get_f64_or("theta0", 0.0)?],
        x0: Array1::zeros(d),
    })
}

fn prepare_audio(cfg: &ExperimentConfig) -> Result<Prepared<AudioModel>> {
    let problem = gen_audio_problem(
        cfg.get_u64_or("data_seed", cfg.get_u64("seed")?)?,
        cfg.get_usize_or("ell", 4000)?,
        cfg.get_usize_or("d_notes", 20)?,
        cfg.get_usize_or("d_positions", 10)?,
        cfg.get_usize_or("p", 120)?,
        cfg.get_f64("sigma")?,
        cfg.get_f64("lambda")?,
        cfg.get_usize_or("sparsity", 8)?,
    )?;
    let theta0 = if cfg.contains("theta0") {
        cfg.get_f64("theta0")?
    } else {
        audio::theta_cs(&problem)
    };
    let d = problem.dim();
    let lo = cfg.get_f64_or("theta_lo", 1e-3)?;
    let hi = cfg.get_f64_or("theta_hi", 1e6)?;
    Ok(Prepared {
        model: AudioModel::new(problem, lo, hi)?,
        theta0: array![theta0],
        x0: Array1::zeros(d),
    })
}

fn prepare_random_effects(cfg: &ExperimentConfig) -> Result<Prepared<RandomEffectsModel>> {
    let (problem, _) = gen_random_effects_problem(
        cfg.get_u64_or("data_seed", cfg.get_u64("seed")?)?,
        cfg.get_usize_or("d_y", 500)?,
        cfg.get_usize_or("p", 1000)?,
        cfg.get_usize_or("d", 5)?,
        cfg.get_f64_or("sigma_true", 0.1)?,
        cfg.get_f64_or("zero_frac", 0.98)?,
        cfg.get_f64_or("lambda", 30.0)?,
    )?;
    let p = problem.dim_beta();
    let d = problem.dim_x();
    let mut theta0 = Array1::from_elem(p + 1, cfg.get_f64_or("beta0", 0.0)?);
    theta0[p] = cfg.get_f64_or("sigma0", 1.0)?;
    Ok(Prepared {
        model: RandomEffectsModel::new(problem)?,
        theta0,
        x0: Array1::zeros(d),
    })
}

fn run_from_config(cfg: &ExperimentConfig) -> Result<RunTrace> {
    warn_if_schedule_inadmissible(cfg)?;
    let schedules = schedules_from(cfg)?;
    let sc = soul_config_from(cfg)?;
    match cfg.experiment()? {
        Experiment::ToyGaussian => {
            let p = prepare_toy(cfg)?;
            soul_run(&p.model, &p.theta0, &p.x0, &schedules, &sc)
        }
        Experiment::Blr => {
            let p = prepare_blr(cfg)?;
            soul_run(&p.model, &p.theta0, &p.x0, &schedules, &sc)
        }
        Experiment::Audio => {
            let p = prepare_audio(cfg)?;
            soul_run(&p.model, &p.theta0, &p.x0, &schedules, &sc)
        }
        Experiment::RandomEffects => {
            let p = prepare_random_effects(cfg)?;
            soul_run(&p.model, &p.theta0, &p.x0, &schedules, &sc)
        }
    }
}

pub fn write_trace_csv(path: &Path, trace: &RunTrace) -> Result<()> {
    let d = trace.theta_hat.len();
    let mut header = String::from("iter,delta");
    for j in 0..d {
        header.push_str(&format!(",theta_{j}"));
    }
    for j in 0..d {
        header.push_str(&format!(",avg_{j}"));
    }
    let mut rows = Vec::with_capacity(trace.iterations.len());
    for i in 0..trace.iterations.len() {
        let mut row = vec![trace.iterations[i].to_string(), fmt17(trace.deltas[i])];
        row.extend(trace.thetas[i].iter().map(|&v| fmt17(v)));
        row.extend(trace.averaged[i].iter().map(|&v| fmt17(v)));
        rows.push(row);
    }
    write_csv(path, &header, &rows)
}

fn summary_line(trace: &RunTrace) -> String {
    let theta: Vec<String> = trace.theta_hat.iter().map(|&v| fmt17(v)).collect();
    format!(
        "theta_hat={} wall_time_s={}",
        theta.join(","),
        fmt17(trace.wall_time_s)
    )
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let trace = run_from_config(&cfg)?;
    let dir = out_dir(&cfg, &args.out);
    write_trace_csv(&dir.join("trace.csv"), &trace)?;
    println!("{}", summary_line(&trace));
    Ok(0)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SOUL_THREADS") {
        let n: usize = v.parse().map_err(|_| {
            SoulError::InvalidArgument("SOUL_THREADS must be a positive integer".into())
        })?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| SoulError::InvalidArgument(e.to_string()))
}

fn cmd_replicate(args: &ReplicateArgs) -> Result<i32> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let n = match args.n {
        Some(n) => n,
        None => cfg.get_u64("replicates")?,
    };
    warn_if_schedule_inadmissible(&cfg)?;
    let schedules = schedules_from(&cfg)?;
    let sc = soul_config_from(&cfg)?;
    let pool = thread_pool()?;
    let results: Vec<Result<Array1<f64>>> = pool.install(|| -> Result<_> {
        Ok(match cfg.experiment()? {
            Experiment::ToyGaussian => {
                let p = prepare_toy(&cfg)?;
                replicate(&p.model, &p.theta0, &p.x0, &schedules, &sc, n)
            }
            Experiment::Blr => {
                let p = prepare_blr(&cfg)?;
                replicate(&p.model, &p.theta0, &p.x0, &schedules, &sc, n)
            }
            Experiment::Audio => {
                let p = prepare_audio(&cfg)?;
                replicate(&p.model, &p.theta0, &p.x0, &schedules, &sc, n)
            }
            Experiment::RandomEffects => {
                let p = prepare_random_effects(&cfg)?;
                replicate(&p.model, &p.theta0, &p.x0, &schedules, &sc, n)
            }
        })
    })?;
    let estimates: Vec<Array1<f64>> = results.into_iter().collect::<Result<_>>()?;

    let dir = out_dir(&cfg, &args.out);
    let d = estimates[0].len();
    let mut header = String::from("replicate");
    for j in 0..d {
        header.push_str(&format!(",theta_{j}"));
    }
    let rows: Vec<Vec<String>> = estimates
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![i.to_string()];
            row.extend(t.iter().map(|&v| fmt17(v)));
            row
        })
        .collect();
    write_csv(&dir.join("replicates.csv"), &header, &rows)?;

    // histogram of the first coordinate
    let vals: Vec<f64> = estimates.iter().map(|t| t[0]).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    let mut counts = vec![0u64; args.bins];
    for &v in &vals {
        let b = (((v - lo) / span * args.bins as f64) as usize).min(args.bins - 1);
        counts[b] += 1;
    }
    let hist_rows: Vec<Vec<String>> = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            vec![
                fmt17(lo + span * b as f64 / args.bins as f64),
                fmt17(lo + span * (b + 1) as f64 / args.bins as f64),
                c.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("histogram.csv"), "bin_lo,bin_hi,count", &hist_rows)?;

    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    println!("replicates={} mean_theta_0={}", vals.len(), fmt17(mean));
    Ok(0)
}

fn cmd_thme_scan(args: &ThmeScanArgs) -> Result<i32> {
    let cfg = ExperimentConfig::load(&args.config)?;
    if args.points < 5 || args.theta_min >= args.theta_max {
        return Err(SoulError::InvalidArgument(
            "need points >= 5 and theta_min < theta_max".into(),
        ));
    }
    let grid: Vec<f64> = (0..args.points)
        .map(|i| {
            args.theta_min
                + (args.theta_max - args.theta_min) * i as f64 / (args.points - 1) as f64
        })
        .collect();
    let chain = ThmeChainConfig {
        gamma: cfg.get_f64_or("thme_gamma", cfg.get_f64("gamma0")?)?,
        burnin: cfg.get_u64_or("thme_burnin", 2000)?,
        n_samples: cfg.get_usize_or("thme_samples", 20_000)?,
        thin: cfg.get_u64_or("thme_thin", 1)?,
        seed: cfg.get_u64("seed")?,
        target_fraction: cfg.get_f64_or("thme_fraction", 0.4)?,
    };
    let scan = match cfg.experiment()? {
        Experiment::ToyGaussian => {
            let p = prepare_toy(&cfg)?;
            thme_scan(&p.model, &grid, &p.x0, &chain)?
        }
        Experiment::Blr => {
            let p = prepare_blr(&cfg)?;
            thme_scan(&p.model, &grid, &p.x0, &chain)?
        }
        other => {
            return Err(SoulError::InvalidArgument(format!(
                "thme-scan supports scalar-theta experiments, not {other:?}"
            )))
        }
    };
    let dir = out_dir(&cfg, &args.out);
    let rows: Vec<Vec<String>> = (0..scan.theta_grid.len())
        .map(|i| {
            vec![
                fmt17(scan.theta_grid[i]),
                fmt17(scan.log_marginal[i]),
                scan.n_inside[i].to_string(),
                fmt17(scan.radius[i]),
            ]
        })
        .collect();
    write_csv(
        &dir.join("thme_scan.csv"),
        "theta,log_phat,n_inside,radius",
        &rows,
    )?;
    match scan.theta_star {
        Some(t) => println!("theta_star={}", fmt17(t)),
        None => println!("theta_star=none (fit not concave)"),
    }
    Ok(0)
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<i32> {
    let report = run_gradient_suite(args.seed, args.points)?;
    let mut worst: f64 = 0.0;
    for (name, err) in &report {
        println!("{name}: max_rel_err={}", fmt17(*err));
        worst = worst.max(*err);
    }
    if worst < args.tolerance {
        println!("gradcheck passed (worst {})", fmt17(worst));
        Ok(0)
    } else {
        eprintln!("gradcheck FAILED (worst {})", fmt17(worst));
        Ok(1)
    }
}

/// Finite-difference verification of every model gradient on small random
/// instances. Returns (oracle name, max relative error) pairs.
pub fn run_gradient_suite(seed: u64, points: usize) -> Result<Vec<(String, f64)>> {
    use crate::rng::RngStream;
    let mut rng = RngStream::new(seed, 900);
    let mut out = Vec::new();
    let h = 1e-5;

    // logistic regression on a small synthetic design
    let (features, labels) = gen_logistic_dataset(seed.wrapping_add(1), 40, 4);
    let data = crate::models::LogisticData::new(features, labels, 5.0)?;
    let blr = BlrModel::new(data, -100.0, 100.0)?;
    let d = blr.dim_x();
    let mut worst_x: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for _ in 0..points {
        let x = rng.standard_normal_vec(d);
        let theta = array![2.0 * rng.standard_normal()];
        let e = gradcheck(
            |v| blr.log_joint(v, &theta).unwrap(),
            |v| blr.grad_x_log_posterior(v, &theta),
            &x,
            h,
        )?;
        worst_x = worst_x.max(e);
        let e = gradcheck(
            |t| blr.log_joint(&x, t).unwrap(),
            |t| blr.grad_theta_log_joint(&x, t),
            &theta,
            h,
        )?;
        worst_t = worst_t.max(e);
    }
    out.push(("blr_grad_x".into(), worst_x));
    out.push(("blr_grad_theta".into(), worst_t));

    // audio model at small scale; theta strictly positive, points kept away
    // from the Huber knee
    let prob = gen_audio_problem(seed.wrapping_add(2), 400, 5, 4, 40, 0.05, 0.1, 4)?;
    let lambda = prob.lambda;
    let model = AudioModel::new(prob, 1e-3, 1e6)?;
    let d = model.dim_x();
    let (mut worst_x, mut worst_t): (f64, f64) = (0.0, 0.0);
    for _ in 0..points {
        let mut x = rng.standard_normal_vec(d);
        for v in x.iter_mut() {
            if (v.abs() - lambda).abs() < 10.0 * h {
                *v += 20.0 * h;
            }
        }
        let theta = array![10.0_f64.powf(2.0 * rng.uniform())];
        let e = gradcheck(
            |v| model.log_joint(v, &theta).unwrap(),
            |v| model.grad_x_log_posterior(v, &theta),
            &x,
            h,
        )?;
        worst_x = worst_x.max(e);
        let scale = theta[0].max(1.0);
        let e = gradcheck(
            |t| model.log_joint(&x, t).unwrap(),
            |t| model.grad_theta_log_joint(&x, t),
            &theta,
            h * scale,
        )?;
        worst_t = worst_t.max(e);
    }
    out.push(("acs_grad_x".into(), worst_x));
    out.push(("acs_grad_theta".into(), worst_t));

    // random-effects model at small scale
    let (prob, _) = gen_random_effects_problem(seed.wrapping_add(3), 30, 8, 3, 0.5, 0.25, 30.0)?;
    let model = RandomEffectsModel::new(prob)?;
    let (dx, dt) = (model.dim_x(), model.dim_theta());
    let (mut worst_x, mut worst_t): (f64, f64) = (0.0, 0.0);
    for _ in 0..points {
        let x = rng.standard_normal_vec(dx);
        let mut theta = rng.standard_normal_vec(dt);
        theta[dt - 1] = 0.5 + rng.uniform();
        let e = gradcheck(
            |v| model.log_joint(v, &theta).unwrap(),
            |v| model.grad_x_log_posterior(v, &theta),
            &x,
            h,
        )?;
        worst_x = worst_x.max(e);
        let e = gradcheck(
            |t| model.log_joint(&x, t).unwrap(),
            |t| model.grad_theta_log_joint(&x, t),
            &theta,
            h,
        )?;
        worst_t = worst_t.max(e);
    }
    out.push(("re_grad_x".into(), worst_x));
    out.push(("re_grad_theta".into(), worst_t));
    Ok(out)
}

fn cmd_check_schedule(args: &CheckScheduleArgs) -> i32 {
    if args.fixed_batch {
        let v = check_fixed_batch(args.a, args.b);
        let word = if v.valid { "valid" } else { "invalid" };
        println!("{word}, b∈({},{})", v.b_interval.0, v.b_interval.1);
        i32::from(!v.valid)
    } else {
        let v = check_increasing_batch(args.a, args.b, args.c);
        if v.valid {
            println!("valid");
            0
        } else {
            println!("invalid: violates {}", v.violated.join(", "));
            1
        }
    }
}

fn cmd_drift_check(args: &DriftCheckArgs) -> Result<i32> {
    let norms: Vec<f64> = args
        .norms
        .split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| {
                SoulError::InvalidArgument(format!("bad norm '{}' in --norms", s.trim()))
            })
        })
        .collect::<Result<_>>()?;
    let points: Vec<Array1<f64>> = norms
        .iter()
        .map(|&r| {
            let mut x = Array1::zeros(args.dim);
            x[0] = r;
            x
        })
        .collect();
    // standard Gaussian target; L2 tail parameters
    let tail = TailParams {
        m1: 1.0,
        m2: 0.5,
        c: 0.0,
        r1: 2.0,
    };
    let report = drift_check(
        |x: &Array1<f64>| -x.clone(),
        &tail,
        args.gamma,
        args.gamma_bar.unwrap_or(args.gamma),
        &points,
        args.n_mc,
        args.seed,
    )?;
    let rows: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|p| {
            vec![
                fmt17(p.x_norm),
                fmt17(p.lhs),
                fmt17(p.std_error),
                fmt17(p.rhs),
                p.pass.to_string(),
            ]
        })
        .collect();
    if let Some(dir) = &args.out {
        write_csv(&dir.join("drift_check.csv"), "x_norm,lhs,stderr,rhs,pass", &rows)?;
    }
    for p in &report.points {
        println!(
            "||x||={} lhs={} rhs={} {}",
            p.x_norm,
            fmt17(p.lhs),
            fmt17(p.rhs),
            if p.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(i32::from(!report.all_pass))
}

fn cmd_gen_data(args: &GenDataArgs) -> Result<i32> {
    std::fs::create_dir_all(&args.out)?;
    match args.kind.as_str() {
        "logistic" => {
            let (features, labels) = gen_logistic_dataset(args.seed, 683, 9);
            let rows: Vec<Vec<String>> = (0..features.nrows())
                .map(|i| {
                    let mut row: Vec<String> =
                        features.row(i).iter().map(|&v| fmt17(v)).collect();
                    row.push((labels[i] as i64).to_string());
                    row
                })
                .collect();
            // raw numeric file without header: consumed by load_csv_dataset
            let path = args.out.join("logistic.csv");
            let header: Vec<String> = (0..9)
                .map(|j| format!("x{j}"))
                .chain(["label".to_string()])
                .collect();
            write_csv(&path, &header.join(","), &rows)?;
            println!("wrote {}", path.display());
        }
        "audio" => {
            let prob = gen_audio_problem(args.seed, 4000, 20, 10, 120, 0.1, 0.01, 8)?;
            let truth = prob.truth.clone().unwrap();
            let rows: Vec<Vec<String>> = prob
                .measurement_rows
                .iter()
                .zip(prob.observation.iter())
                .map(|(&r, &y)| vec![r.to_string(), fmt17(y)])
                .collect();
            write_csv(&args.out.join("audio_y.csv"), "time_index,observation", &rows)?;
            let z_rows: Vec<Vec<String>> = truth.iter().map(|&v| vec![fmt17(v)]).collect();
            write_csv(&args.out.join("audio_z_true.csv"), "z_true", &z_rows)?;
            println!("wrote {}", args.out.join("audio_y.csv").display());
        }
        "random-effects" => {
            let (prob, truth) =
                gen_random_effects_problem(args.seed, 500, 1000, 5, 0.1, 0.98, 30.0)?;
            let b_rows: Vec<Vec<String>> =
                truth.beta_true.iter().map(|&v| vec![fmt17(v)]).collect();
            write_csv(&args.out.join("re_beta_true.csv"), "beta_true", &b_rows)?;
            let y_rows: Vec<Vec<String>> = prob
                .labels
                .iter()
                .map(|&v| vec![(v as i64).to_string()])
                .collect();
            write_csv(&args.out.join("re_labels.csv"), "label", &y_rows)?;
            println!("wrote {}", args.out.join("re_labels.csv").display());
        }
        other => {
            return Err(SoulError::InvalidArgument(format!(
                "unknown gen-data kind '{other}' (expected logistic, audio or random-effects)"
            )))
        }
    }
    Ok(0)
}

fn cmd_map_sweep(args: &MapSweepArgs) -> Result<i32> {
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment()? != Experiment::Audio {
        return Err(SoulError::InvalidArgument(
            "map-sweep applies to the audio experiment".into(),
        ));
    }
    if !(args.theta_min > 0.0) || args.theta_min >= args.theta_max || args.points < 2 {
        return Err(SoulError::InvalidArgument(
            "need 0 < theta_min < theta_max and points >= 2".into(),
        ));
    }
    let p = prepare_audio(&cfg)?;
    let prob = &p.model.problem;
    let truth = prob.truth.clone().ok_or(SoulError::EmptyInput("audio ground truth"))?;
    let (lo, hi) = (args.theta_min.ln(), args.theta_max.ln());
    let grid: Vec<f64> = (0..args.points)
        .map(|i| (lo + (hi - lo) * i as f64 / (args.points - 1) as f64).exp())
        .collect();
    let pool = thread_pool()?;
    let mses: Vec<Result<f64>> = pool.install(|| {
        grid.par_iter()
            .map(|&theta| {
                let sol = audio::map_reconstruct(prob, theta, 2000, 1e-8)?;
                let z_hat = prob.dictionary.dot(&sol.x_hat);
                Ok(audio::mse(&truth, &z_hat))
            })
            .collect()
    });
    let mses: Vec<f64> = mses.into_iter().collect::<Result<_>>()?;
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(mses.iter())
        .map(|(&t, &m)| vec![fmt17(t), fmt17(m)])
        .collect();
    let dir = out_dir(&cfg, &args.out);
    write_csv(&dir.join("map_sweep.csv"), "theta,mse", &rows)?;
    let (best_i, best) = mses
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    println!("best_theta={} best_mse={}", fmt17(grid[best_i]), fmt17(*best));
    Ok(0)
}
