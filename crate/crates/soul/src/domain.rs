//! Parameter domain boxes, the projection operator and the weighted
//! averaged iterate.

use ndarray::Array1;

use crate::error::{Result, SoulError};

/// Axis-aligned box constraint on the parameter vector.
///
/// Bounds may be infinite on either side; `is_compact` reports whether the
/// box is bounded, which the schedule checkers use to warn when the
/// compactness assumption behind the theory does not hold.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDomain {
    lower: Array1<f64>,
    upper: Array1<f64>,
}

impl ParameterDomain {
    pub fn new(lower: Array1<f64>, upper: Array1<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(SoulError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(SoulError::EmptyInput("domain bounds"));
        }
        for (l, u) in lower.iter().zip(upper.iter()) {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(SoulError::InvalidArgument(format!(
                    "invalid bound pair ({l}, {u})"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// A box with the same `[lo, hi]` interval in every coordinate.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(Array1::from_elem(dim, lo), Array1::from_elem(dim, hi))
    }

    /// The unconstrained domain.
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: Array1::from_elem(dim, f64::NEG_INFINITY),
            upper: Array1::from_elem(dim, f64::INFINITY),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &Array1<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &Array1<f64> {
        &self.upper
    }

    pub fn is_compact(&self) -> bool {
        self.lower.iter().all(|l| l.is_finite()) && self.upper.iter().all(|u| u.is_finite())
    }

    pub fn contains(&self, theta: &Array1<f64>) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(t, (l, u))| *t >= *l && *t <= *u)
    }
}

/// Per-coordinate clamp onto the box; for box domains this is the Euclidean
/// projection.
pub fn project(theta: &Array1<f64>, domain: &ParameterDomain) -> Result<Array1<f64>> {
    if theta.len() != domain.dim() {
        return Err(SoulError::DimensionMismatch {
            expected: domain.dim(),
            got: theta.len(),
        });
    }
    Ok(Array1::from_iter(
        theta
            .iter()
            .zip(domain.lower.iter().zip(domain.upper.iter()))
            .map(|(t, (l, u))| t.clamp(*l, *u)),
    ))
}

/// Batch form of the weighted average sum(delta_n theta_n) / sum(delta_n).
pub fn averaged_iterate(thetas: &[Array1<f64>], deltas: &[f64]) -> Result<Array1<f64>> {
    if thetas.is_empty() {
        return Err(SoulError::EmptyInput("averaged_iterate thetas"));
    }
    if thetas.len() != deltas.len() {
        return Err(SoulError::DimensionMismatch {
            expected: thetas.len(),
            got: deltas.len(),
        });
    }
    let mut avg = WeightedAverage::new(thetas[0].len());
    for (theta, &delta) in thetas.iter().zip(deltas.iter()) {
        avg.push(theta, delta)?;
    }
    avg.value()
        .ok_or(SoulError::EmptyInput("averaged_iterate thetas"))
}

/// Incremental running weighted mean. Keeps only the current value, so the
/// full trace need not be stored when tracing is disabled.
#[derive(Debug, Clone)]
pub struct WeightedAverage {
    mean: Array1<f64>,
    weight: f64,
    count: usize,
}

impl WeightedAverage {
    pub fn new(dim: usize) -> Self {
        Self {
            mean: Array1::zeros(dim),
            weight: 0.0,
            count: 0,
        }
    }

    pub fn push(&mut self, theta: &Array1<f64>, delta: f64) -> Result<()> {
        if theta.len() != self.mean.len() {
            return Err(SoulError::DimensionMismatch {
                expected: self.mean.len(),
                got: theta.len(),
            });
        }
        if !(delta > 0.0) {
            return Err(SoulError::InvalidArgument(format!(
                "nonpositive averaging weight {delta}"
            )));
        }
        self.weight += delta;
        let scale = delta / self.weight;
        self.mean.zip_mut_with(theta, |m, t| *m += scale * (*t - *m));
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn value(&self) -> Option<Array1<f64>> {
        (self.count > 0).then(|| self.mean.clone())
    }
}

/// Per-run record produced by the optimizer.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// Recorded (thinned) iteration indices, 1-based over the whole run.
    pub iterations: Vec<usize>,
    pub thetas: Vec<Array1<f64>>,
    /// Averaged iterate at each recorded iteration (equal length to `thetas`).
    pub averaged: Vec<Array1<f64>>,
    /// Step size used at each recorded iteration.
    pub deltas: Vec<f64>,
    /// Final averaged iterate over all post-warmup iterations (exact,
    /// independent of trace thinning).
    pub theta_hat: Array1<f64>,
    /// Last latent chain state.
    pub final_latent: Array1<f64>,
    /// Thinned latent samples, when retention was requested.
    pub retained_latent: Option<Vec<Array1<f64>>>,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl RunTrace {
    pub fn record_count(&self) -> usize {
        self.thetas.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn norm(v: &Array1<f64>) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn project_clamps_above() {
        let d = ParameterDomain::uniform(1, -100.0, 100.0).unwrap();
        assert_eq!(project(&array![150.0], &d).unwrap(), array![100.0]);
    }

    #[test]
    fn project_identity_inside() {
        let d = ParameterDomain::uniform(3, -1.0, 1.0).unwrap();
        let x = array![0.3, -0.9, 0.0];
        assert_eq!(project(&x, &d).unwrap(), x);
    }

    #[test]
    fn project_per_coordinate() {
        let d = ParameterDomain::uniform(2, -1.0, 1.0).unwrap();
        assert_eq!(project(&array![-2.0, 0.5], &d).unwrap(), array![-1.0, 0.5]);
    }

    #[test]
    fn project_dimension_mismatch() {
        let d = ParameterDomain::uniform(2, -1.0, 1.0).unwrap();
        assert!(project(&array![0.0], &d).is_err());
    }

    #[test]
    fn half_infinite_domain() {
        let d = ParameterDomain::new(array![1e-5], array![f64::INFINITY]).unwrap();
        assert!(!d.is_compact());
        assert_eq!(project(&array![-3.0], &d).unwrap(), array![1e-5]);
        assert_eq!(project(&array![7.0], &d).unwrap(), array![7.0]);
    }

    #[test]
    fn averaged_constant() {
        let thetas = vec![array![2.5]; 7];
        let deltas: Vec<f64> = (1..=7).map(|n| 1.0 / n as f64).collect();
        let out = averaged_iterate(&thetas, &deltas).unwrap();
        assert!((out[0] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn averaged_equal_weights() {
        let out = averaged_iterate(&[array![0.0], array![2.0]], &[1.0, 1.0]).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn averaged_weighted() {
        // (1*0 + 2*3) / 3 = 2
        let out = averaged_iterate(&[array![0.0], array![3.0]], &[1.0, 2.0]).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn averaged_rejects_empty_and_nonpositive() {
        assert!(averaged_iterate(&[], &[]).is_err());
        assert!(averaged_iterate(&[array![1.0]], &[0.0]).is_err());
        assert!(averaged_iterate(&[array![1.0]], &[-1.0]).is_err());
    }

    #[test]
    fn incremental_matches_batch() {
        let mut rng = crate::rng::RngStream::new(11, 0);
        let thetas: Vec<Array1<f64>> =
            (0..200).map(|_| rng.standard_normal_vec(4)).collect();
        let deltas: Vec<f64> = (1..=200).map(|n| 60.0 / (n as f64).powf(0.8)).collect();
        let batch = {
            let mut num = Array1::<f64>::zeros(4);
            let mut den = 0.0;
            for (t, &d) in thetas.iter().zip(deltas.iter()) {
                num = num + t * d;
                den += d;
            }
            num / den
        };
        let inc = averaged_iterate(&thetas, &deltas).unwrap();
        for (a, b) in inc.iter().zip(batch.iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn project_idempotent(xs in proptest::collection::vec(-1e3f64..1e3, 4)) {
            let d = ParameterDomain::uniform(4, -2.0, 5.0).unwrap();
            let x = Array1::from_vec(xs);
            let p1 = project(&x, &d).unwrap();
            let p2 = project(&p1, &d).unwrap();
            prop_assert_eq!(p1, p2);
        }

        #[test]
        fn project_nonexpansive(
            xs in proptest::collection::vec(-1e3f64..1e3, 4),
            ys in proptest::collection::vec(-1e3f64..1e3, 4),
        ) {
            let d = ParameterDomain::uniform(4, -2.0, 5.0).unwrap();
            let a = Array1::from_vec(xs);
            let b = Array1::from_vec(ys);
            let pa = project(&a, &d).unwrap();
            let pb = project(&b, &d).unwrap();
            prop_assert!(norm(&(&pa - &pb)) <= norm(&(&a - &b)) + 1e-12);
        }

        #[test]
        fn averaged_stays_in_domain(
            xs in proptest::collection::vec(0.0f64..1.0, 1..20),
            ws in proptest::collection::vec(0.01f64..10.0, 20),
        ) {
            let d = ParameterDomain::uniform(1, 0.0, 1.0).unwrap();
            let thetas: Vec<Array1<f64>> = xs.iter().map(|&x| array![x]).collect();
            let out = averaged_iterate(&thetas, &ws[..thetas.len()]).unwrap();
            prop_assert!(d.contains(&out));
        }
    }
}
