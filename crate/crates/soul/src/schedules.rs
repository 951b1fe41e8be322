//! Polynomial step-size and batch-size laws, with the admissibility
//! checkers for increasing-batch and fixed-batch regimes.

use crate::error::{Result, SoulError};

/// The three polynomial decay laws driving a run:
/// delta_n = delta0 * n^-a, gamma_n = min(gamma0 * n^-b, gamma_bar),
/// m_n = ceil(m0 * n^c).
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSet {
    pub delta0: f64,
    pub a: f64,
    pub gamma0: f64,
    pub b: f64,
    pub m0: u64,
    pub c: f64,
    pub gamma_bar: f64,
}

impl ScheduleSet {
    pub fn new(delta0: f64, a: f64, gamma0: f64, b: f64, m0: u64, c: f64) -> Result<Self> {
        let s = Self {
            delta0,
            a,
            gamma0,
            b,
            m0,
            c,
            gamma_bar: gamma0,
        };
        s.validate()?;
        Ok(s)
    }

    /// Constant gamma and m, polynomially decaying delta; the configuration
    /// used by all three experiments.
    pub fn fixed_gamma(delta0: f64, a: f64, gamma: f64) -> Result<Self> {
        Self::new(delta0, a, gamma, 0.0, 1, 0.0)
    }

    pub fn with_gamma_bar(mut self, gamma_bar: f64) -> Result<Self> {
        self.gamma_bar = gamma_bar;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0) || !(self.gamma0 > 0.0) || !(self.gamma_bar > 0.0) {
            return Err(SoulError::InvalidArgument(
                "delta0, gamma0 and gamma_bar must be positive".into(),
            ));
        }
        if self.a < 0.0 || self.b < 0.0 || self.c < 0.0 {
            return Err(SoulError::InvalidArgument(
                "exponents a, b, c must be non-negative".into(),
            ));
        }
        if self.m0 == 0 {
            return Err(SoulError::InvalidArgument("m0 must be at least 1".into()));
        }
        Ok(())
    }

    pub fn eval_delta(&self, n: u64) -> Result<f64> {
        check_index(n)?;
        Ok(self.delta0 * (n as f64).powf(-self.a))
    }

    pub fn eval_gamma(&self, n: u64) -> Result<f64> {
        check_index(n)?;
        Ok((self.gamma0 * (n as f64).powf(-self.b)).min(self.gamma_bar))
    }

    pub fn eval_batch(&self, n: u64) -> Result<u64> {
        check_index(n)?;
        let m = (self.m0 as f64 * (n as f64).powf(self.c)).ceil();
        Ok((m as u64).max(1))
    }
}

fn check_index(n: u64) -> Result<()> {
    if n == 0 {
        Err(SoulError::InvalidArgument(
            "schedule index n must be >= 1".into(),
        ))
    } else {
        Ok(())
    }
}

/// Verdict of an admissibility check, with the names of violated conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleVerdict {
    pub valid: bool,
    pub violated: Vec<&'static str>,
}

/// Increasing-batch admissibility for the square-root kernel bias:
/// requires a < 1, a + b/2 > 1 and a - b + c > 1 (strict).
pub fn check_increasing_batch(a: f64, b: f64, c: f64) -> ScheduleVerdict {
    let mut violated = Vec::new();
    if !(a < 1.0) {
        violated.push("a<1");
    }
    if !(a + b / 2.0 > 1.0) {
        violated.push("a+b/2>1");
    }
    if !(a - b + c > 1.0) {
        violated.push("a-b+c>1");
    }
    ScheduleVerdict {
        valid: violated.is_empty(),
        violated,
    }
}

/// Fixed-batch admissibility: b must lie strictly inside
/// (2(1-a), a - 1/2), which is nonempty only when a > 5/6.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedBatchVerdict {
    pub valid: bool,
    pub b_interval: (f64, f64),
}

pub fn check_fixed_batch(a: f64, b: f64) -> FixedBatchVerdict {
    let lo = 2.0 * (1.0 - a);
    let hi = a - 0.5;
    FixedBatchVerdict {
        valid: lo < b && b < hi,
        b_interval: (lo, hi),
    }
}
