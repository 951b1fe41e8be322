//! Dataset ingestion and synthetic problem generators.

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Result, SoulError};
use crate::models::audio::AudioProblem;
use crate::models::blr::LogisticData;
use crate::models::random_effects::RandomEffectsProblem;
use crate::models::sigmoid;
use crate::rng::RngStream;

/// Loads a comma-separated dataset whose last column is a 0/1 label.
///
/// Features are z-score normalized per column and an all-ones intercept
/// column is appended. Rows with missing (empty) fields are dropped;
/// constant columns are left unscaled with a warning on stderr.
pub fn load_csv_dataset(path: &Path, sigma2: f64) -> Result<LogisticData> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.iter().any(|f| f.is_empty()) {
            continue; // missing value: drop the row
        }
        let mut row = Vec::with_capacity(fields.len());
        for f in &fields {
            match f.parse::<f64>() {
                Ok(v) => row.push(v),
                Err(_) => {
                    // allow a single header row at the top
                    if lineno == 0 {
                        row.clear();
                        break;
                    }
                    return Err(SoulError::Parse {
                        line: lineno + 1,
                        message: format!("non-numeric field '{f}'"),
                    });
                }
            }
        }
        if row.is_empty() {
            continue;
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(SoulError::Parse {
                    line: lineno + 1,
                    message: format!("expected {w} fields, got {}", row.len()),
                });
            }
            _ => {}
        }
        rows.push(row);
    }
    let width = width.ok_or(SoulError::EmptyInput("dataset file"))?;
    if width < 2 {
        return Err(SoulError::InvalidArgument(
            "dataset needs at least one feature and a label column".into(),
        ));
    }
    let (n, k) = (rows.len(), width - 1);

    let mut labels = Array1::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        let y = row[k];
        if y != 0.0 && y != 1.0 {
            return Err(SoulError::InvalidArgument(format!(
                "label column must be 0/1, found {y}"
            )));
        }
        labels[i] = y;
    }

    let mut features = Array2::zeros((n, k + 1));
    for j in 0..k {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if sd == 0.0 {
            eprintln!("warning: column {j} is constant, left unscaled");
            for i in 0..n {
                features[(i, j)] = col[i];
            }
        } else {
            for i in 0..n {
                features[(i, j)] = (col[i] - mean) / sd;
            }
        }
    }
    for i in 0..n {
        features[(i, k)] = 1.0;
    }
    LogisticData::new(features, labels, sigma2)
}

/// Writes a synthetic logistic dataset (features + trailing 0/1 label) in
/// the shape of the breast-cancer benchmark: strong linear signal so a
/// classifier can reach a few percent error.
pub fn gen_logistic_dataset(seed: u64, n: usize, k: usize) -> (Array2<f64>, Array1<f64>) {
    let mut rng = RngStream::new(seed, 0);
    // Two unit-covariance Gaussian classes separated by a same-signed mean
    // shift, mirroring clinical data where every feature points the same
    // way: positive coefficients of moderate size and a low error floor.
    // A 1% label flip keeps the sample non-separable, so the fitted
    // coefficients stay anchored instead of drifting with the prior.
    let mut mu = Array1::zeros(k);
    for m in mu.iter_mut() {
        *m = 1.1 + 0.6 * rng.uniform();
    }
    let mut features = Array2::zeros((n, k));
    let mut labels = Array1::zeros(n);
    for i in 0..n {
        let mut y = f64::from(rng.uniform() < 0.5);
        let mut row = rng.standard_normal_vec(k);
        if y == 1.0 {
            row += &mu;
        }
        if rng.uniform() < 0.01 {
            y = 1.0 - y;
        }
        labels[i] = y;
        features.row_mut(i).assign(&row);
    }
    (features, labels)
}

/// Builds the windowed-sinusoid dictionary: one unit-norm column per
/// (frequency index, time-shift index) pair, each a quarter-length
/// Hann-windowed sine placed at evenly spaced offsets.
pub fn sinusoid_dictionary(ell: usize, d_notes: usize, d_positions: usize) -> Result<Array2<f64>> {
    let d = d_notes * d_positions;
    if d > ell || d_notes == 0 || d_positions == 0 {
        return Err(SoulError::InvalidArgument(format!(
            "need d_notes*d_positions <= ell, got {d} > {ell}"
        )));
    }
    let window = ell / 4;
    if window < 2 {
        return Err(SoulError::InvalidArgument("signal too short".into()));
    }
    let stride = if d_positions == 1 {
        0
    } else {
        (ell - window) / (d_positions - 1)
    };
    let mut psi = Array2::zeros((ell, d));
    for pos in 0..d_positions {
        let start = pos * stride;
        for note in 0..d_notes {
            let col = pos * d_notes + note;
            let freq = (note + 1) as f64;
            let mut norm_sq = 0.0;
            for t in 0..window {
                let u = t as f64 / window as f64;
                let hann = 0.5 * (1.0 - (std::f64::consts::TAU * u).cos());
                let v = hann * (std::f64::consts::TAU * freq * u).sin();
                psi[(start + t, col)] = v;
                norm_sq += v * v;
            }
            let norm = norm_sq.sqrt();
            if norm > 0.0 {
                for t in 0..window {
                    psi[(start + t, col)] /= norm;
                }
            }
        }
    }
    Ok(psi)
}

#[allow(clippy::too_many_arguments)]
pub fn gen_audio_problem(
    seed: u64,
    ell: usize,
    d_notes: usize,
    d_positions: usize,
    p: usize,
    sigma: f64,
    lambda: f64,
    sparsity: usize,
) -> Result<AudioProblem> {
    let d = d_notes * d_positions;
    if p >= ell || sparsity > d {
        return Err(SoulError::InvalidArgument(format!(
            "infeasible dims: ell={ell}, d={d}, p={p}, sparsity={sparsity}"
        )));
    }
    let psi = sinusoid_dictionary(ell, d_notes, d_positions)?;
    let mut rng = RngStream::new(seed, 0);

    let mut x_true = Array1::zeros(d);
    let idx = rng.permutation(d);
    for &i in idx.iter().take(sparsity) {
        x_true[i] = 0.5 + rng.uniform();
    }
    let z_true = psi.dot(&x_true);

    let row_perm = rng.permutation(ell);
    let mut measurement_rows: Vec<usize> = row_perm.into_iter().take(p).collect();
    measurement_rows.sort_unstable();

    let mut observation = Array1::zeros(p);
    for (j, &r) in measurement_rows.iter().enumerate() {
        observation[j] = z_true[r] + sigma * rng.standard_normal();
    }

    AudioProblem::new(psi, measurement_rows, observation, sigma, lambda, Some(z_true))
}

/// Desk-scale audio defaults: ell=4000, 20 notes x 10 positions, p=120
/// measurements, 8 active coefficients.
pub fn gen_audio_problem_default(seed: u64, sigma: f64, lambda: f64) -> Result<AudioProblem> {
    gen_audio_problem(seed, 4000, 20, 10, 120, sigma, lambda, 8)
}

pub struct RandomEffectsTruth {
    pub beta_true: Array1<f64>,
    pub x_true: Array1<f64>,
}

/// Random-effects logistic generator. Covariate and loading rows are
/// i.i.d. Gaussian scaled by 1/sqrt(p) and 1/sqrt(d) so the logits stay
/// O(1) at large dimensions.
#[allow(clippy::too_many_arguments)]
pub fn gen_random_effects_problem(
    seed: u64,
    d_y: usize,
    p: usize,
    d: usize,
    sigma_true: f64,
    zero_frac: f64,
    lambda: f64,
) -> Result<(RandomEffectsProblem, RandomEffectsTruth)> {
    if !(0.0..1.0).contains(&zero_frac) {
        return Err(SoulError::InvalidArgument("zero_frac must lie in [0,1)".into()));
    }
    let mut rng = RngStream::new(seed, 0);

    let mut beta_true = Array1::zeros(p);
    for b in beta_true.iter_mut() {
        *b = 1.0 + 4.0 * rng.uniform();
    }
    let n_zero = (zero_frac * p as f64).floor() as usize;
    let perm = rng.permutation(p);
    for &i in perm.iter().take(n_zero) {
        beta_true[i] = 0.0;
    }

    let x_true = rng.standard_normal_vec(d);

    let v_scale = 1.0 / (p as f64).sqrt();
    let z_scale = 1.0 / (d as f64).sqrt();
    let mut covariates = Array2::zeros((d_y, p));
    let mut loadings = Array2::zeros((d_y, d));
    let mut labels = Array1::zeros(d_y);
    for i in 0..d_y {
        for j in 0..p {
            covariates[(i, j)] = v_scale * rng.standard_normal();
        }
        for j in 0..d {
            loadings[(i, j)] = z_scale * rng.standard_normal();
        }
        let logit = covariates.row(i).dot(&beta_true)
            + sigma_true * loadings.row(i).dot(&x_true);
        labels[i] = f64::from(rng.uniform() < sigmoid(logit));
    }

    let problem = RandomEffectsProblem::new(covariates, loadings, labels, lambda)?;
    Ok((problem, RandomEffectsTruth { beta_true, x_true }))
}

/// Number of coefficients strictly above the threshold in absolute value.
pub fn support_count(beta: &Array1<f64>, tau: f64) -> usize {
    assert!(tau > 0.0);
    beta.iter().filter(|b| b.abs() > tau).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::io::Write;

    #[test]
    fn loads_two_row_toy_file_with_exact_zscores() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "1.0,10.0,0\n3.0,20.0,1").unwrap();
        let data = load_csv_dataset(f.path(), 5.0).unwrap();
        assert_eq!(data.n_obs(), 2);
        assert_eq!(data.dim(), 3); // 2 features + intercept
        assert_eq!(data.covariates.row(0).to_owned(), array![-1.0, -1.0, 1.0]);
        assert_eq!(data.covariates.row(1).to_owned(), array![1.0, 1.0, 1.0]);
        assert_eq!(data.labels, array![0.0, 1.0]);
    }

    #[test]
    fn drops_rows_with_missing_values() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "1.0,0\n,1\n2.0,1\n3.0,0").unwrap();
        let data = load_csv_dataset(f.path(), 5.0).unwrap();
        assert_eq!(data.n_obs(), 3);
    }

    #[test]
    fn skips_header_row() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x1,x2,label\n1.0,2.0,1\n2.0,1.0,0").unwrap();
        let data = load_csv_dataset(f.path(), 5.0).unwrap();
        assert_eq!(data.n_obs(), 2);
    }

    #[test]
    fn rejects_non_binary_label() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "1.0,2\n2.0,0").unwrap();
        assert!(load_csv_dataset(f.path(), 5.0).is_err());
    }

    #[test]
    fn reports_line_number_for_bad_row() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "1.0,0\nbad,1").unwrap();
        match load_csv_dataset(f.path(), 5.0).unwrap_err() {
            SoulError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn dictionary_columns_unit_norm() {
        let psi = sinusoid_dictionary(400, 5, 4).unwrap();
        assert_eq!(psi.dim(), (400, 20));
        for col in psi.columns() {
            let n = col.dot(&col);
            assert!((n - 1.0).abs() < 1e-12, "{n}");
        }
    }

    #[test]
    fn audio_generator_is_deterministic_and_respects_sparsity() {
        let a = gen_audio_problem(9, 800, 8, 5, 60, 0.01, 0.1, 6).unwrap();
        let b = gen_audio_problem(9, 800, 8, 5, 60, 0.01, 0.1, 6).unwrap();
        assert_eq!(a.observation, b.observation);
        assert_eq!(a.measurement_rows, b.measurement_rows);
        let c = gen_audio_problem(10, 800, 8, 5, 60, 0.01, 0.1, 6).unwrap();
        assert_ne!(a.observation, c.observation);
    }

    #[test]
    fn audio_zero_sparsity_gives_pure_noise() {
        let prob = gen_audio_problem(3, 800, 8, 5, 60, 0.5, 0.1, 0).unwrap();
        let z = prob.truth.unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        // observations are pure noise, sd about sigma
        let var = prob.observation.dot(&prob.observation) / prob.observation.len() as f64;
        assert!((var.sqrt() - 0.5).abs() < 0.15);
    }

    #[test]
    fn audio_rejects_infeasible_dims() {
        assert!(gen_audio_problem(0, 100, 20, 10, 50, 0.1, 0.1, 5).is_err());
        assert!(gen_audio_problem(0, 800, 8, 5, 900, 0.1, 0.1, 5).is_err());
    }

    #[test]
    fn random_effects_zero_frac_counts() {
        let (_, truth) =
            gen_random_effects_problem(4, 50, 100, 3, 0.1, 0.98, 30.0).unwrap();
        assert_eq!(support_count(&truth.beta_true, 0.005), 2);
        let (_, one) =
            gen_random_effects_problem(4, 50, 100, 3, 0.1, 1.0 - 1.0 / 100.0, 30.0).unwrap();
        assert_eq!(support_count(&one.beta_true, 0.005), 1);
    }

    #[test]
    fn random_effects_sigma_zero_ignores_latents() {
        let (a, ta) = gen_random_effects_problem(6, 40, 20, 3, 0.0, 0.5, 30.0).unwrap();
        // regenerating with sigma=0 gives labels independent of x_true; the
        // logits reduce to the fixed effects only
        for i in 0..a.n_obs() {
            let logit = a.covariates.row(i).dot(&ta.beta_true);
            let p = sigmoid(logit);
            assert!((0.0..=1.0).contains(&p));
        }
        assert_eq!(ta.x_true.len(), 3);
    }

    #[test]
    fn support_count_strict_threshold() {
        assert_eq!(support_count(&array![0.004, 0.006], 0.005), 1);
        assert_eq!(support_count(&array![0.0, 0.0, 0.0], 0.005), 0);
        assert_eq!(support_count(&array![-0.01, 0.01], 0.005), 2);
    }

    #[test]
    fn logistic_generator_shapes_and_determinism() {
        let (xa, ya) = gen_logistic_dataset(11, 100, 9);
        let (xb, yb) = gen_logistic_dataset(11, 100, 9);
        assert_eq!(xa, xb);
        assert_eq!(ya, yb);
        assert!(ya.iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(xa.dim(), (100, 9));
    }
}
