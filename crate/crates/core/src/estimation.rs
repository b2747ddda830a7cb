//! Rank estimation by sequential testing.
//!
//! Test `rank <= 0`, `rank <= 1`, ... and stop at the first non-rejection.
//! Any per-step test can drive the loop through [`StepTest`].

use serde::Serialize;

use crate::data::MatrixEstimate;
use crate::error::{RankError, Result};
use crate::inference::cf::{cf_analytic_with, cf_numerical_with};
use crate::inference::covariance::VecCovariance;
use crate::inference::kp::kp_test_with;
use crate::inference::result::TestResult;
use crate::resampling::BootstrapEnsemble;
use crate::scalar::{lit, to_f64, Real};
use crate::spectral::{svd, SpectralDecomposition};

/// One step of a sequential search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepOutcome<T: Real> {
    pub r: usize,
    pub statistic: T,
    pub critical_value: Option<T>,
    pub reject: bool,
}

impl<T: Real> From<&TestResult<T>> for StepOutcome<T> {
    fn from(res: &TestResult<T>) -> Self {
        Self { r: res.r, statistic: res.statistic, critical_value: res.critical_value, reject: res.reject }
    }
}

/// A test of `rank <= r` usable inside the sequential search.
pub trait StepTest<T: Real> {
    /// Number of columns `k`; the search covers `r = 0..k`.
    fn cols(&self) -> usize;

    /// Tests `rank <= r` at level `alpha`, with `alpha` in `[0, 1)`.
    fn step(&self, r: usize, alpha: T) -> Result<StepOutcome<T>>;
}

/// Wald test at each step.
pub struct KpEngine<'a, T: Real> {
    est: &'a MatrixEstimate<T>,
    cov: &'a VecCovariance<T>,
    dec: SpectralDecomposition<T>,
}

impl<'a, T: Real> KpEngine<'a, T> {
    pub fn new(est: &'a MatrixEstimate<T>, cov: &'a VecCovariance<T>) -> Result<Self> {
        Ok(Self { est, cov, dec: svd(&est.values)? })
    }
}

impl<T: Real> StepTest<T> for KpEngine<'_, T> {
    fn cols(&self) -> usize {
        self.est.cols()
    }

    fn step(&self, r: usize, alpha: T) -> Result<StepOutcome<T>> {
        Ok(StepOutcome::from(&kp_test_with(self.est, &self.dec, self.cov, r, alpha)?))
    }
}

/// Which derivative estimate the bootstrap engine uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeKind<T: Real> {
    Analytic { kappa: T },
    Numerical { kappa: T },
}

/// Bootstrap test at each step, sharing one ensemble across steps.
pub struct CfEngine<'a, T: Real> {
    est: &'a MatrixEstimate<T>,
    ensemble: &'a BootstrapEnsemble<T>,
    kind: DerivativeKind<T>,
    dec: SpectralDecomposition<T>,
}

impl<'a, T: Real> CfEngine<'a, T> {
    pub fn new(est: &'a MatrixEstimate<T>, ensemble: &'a BootstrapEnsemble<T>, kind: DerivativeKind<T>) -> Result<Self> {
        if ensemble.is_empty() || ensemble.draws[0].shape() != est.values.shape() {
            return Err(RankError::InvalidInput("bootstrap draws do not match the estimate".into()));
        }
        Ok(Self { est, ensemble, kind, dec: svd(&est.values)? })
    }
}

impl<T: Real> StepTest<T> for CfEngine<'_, T> {
    fn cols(&self) -> usize {
        self.est.cols()
    }

    fn step(&self, r: usize, alpha: T) -> Result<StepOutcome<T>> {
        let res = match self.kind {
            DerivativeKind::Analytic { kappa } => cf_analytic_with(self.est, &self.dec, self.ensemble, r, alpha, kappa)?,
            DerivativeKind::Numerical { kappa } => cf_numerical_with(self.est, &self.dec, self.ensemble, r, alpha, kappa)?,
        };
        Ok(StepOutcome::from(&res))
    }
}

/// Estimated rank with the tests that led to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEstimate<T: Real> {
    pub rank: usize,
    pub alpha: T,
    pub trail: Vec<StepOutcome<T>>,
    pub flags: Vec<String>,
}

/// Smallest `r` whose test does not reject at level `alpha`; `k` if all
/// reject.
pub fn sequential_estimate<T: Real, E: StepTest<T> + ?Sized>(engine: &E, alpha: T) -> Result<RankEstimate<T>> {
    if !(alpha >= T::zero() && alpha < T::one()) {
        return Err(RankError::InvalidArgument(format!("level {} must lie in [0, 1)", to_f64(alpha))));
    }
    let k = engine.cols();
    let mut trail = Vec::with_capacity(k);
    for r in 0..k {
        let outcome = engine.step(r, alpha).map_err(|e| RankError::Step { step: r, source: Box::new(e) })?;
        let reject = outcome.reject;
        trail.push(outcome);
        if !reject {
            return Ok(RankEstimate { rank: r, alpha, trail, flags: Vec::new() });
        }
    }
    Ok(RankEstimate { rank: k, alpha, trail, flags: Vec::new() })
}

/// Level sequence `alpha_n` for the consistent estimator, described through
/// `log alpha_n` so that very small levels stay representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LevelSequence {
    /// `scale * n^(-exponent)`.
    Power { scale: f64, exponent: f64 },
    /// `exp(-n^2)`. Shrinks too fast for consistency; kept as a cautionary case.
    ExpNegSquare,
    /// A fixed level. Does not vanish.
    Constant(f64),
}

pub const FLAG_RATE_VIOLATED: &str = "level-shrinks-too-fast";
pub const FLAG_LEVEL_NOT_VANISHING: &str = "level-does-not-vanish";

impl LevelSequence {
    pub fn log_level(&self, n: f64) -> f64 {
        match *self {
            Self::Power { scale, exponent } => scale.ln() - exponent * n.ln(),
            Self::ExpNegSquare => -n * n,
            Self::Constant(a) => a.ln(),
        }
    }

    pub fn level(&self, n: f64) -> f64 {
        self.log_level(n).exp().min(1.0)
    }

    /// Advisory check of `alpha_n -> 0` and `tau_n^{-2} log alpha_n -> 0`
    /// with `tau_n = sqrt(n)`, over the grid `n, 10n, ..., 10^decades n`.
    pub fn check(&self, n: usize, decades: u32) -> Vec<String> {
        let grid: Vec<f64> = (0..=decades).map(|d| n.max(2) as f64 * 10f64.powi(d as i32)).collect();
        let rate: Vec<f64> = grid.iter().map(|&m| self.log_level(m).abs() / m).collect();
        let log_levels: Vec<f64> = grid.iter().map(|&m| self.log_level(m)).collect();
        let mut flags = Vec::new();
        if rate.windows(2).any(|w| w[1] >= w[0]) {
            flags.push(FLAG_RATE_VIOLATED.to_string());
        }
        if log_levels.windows(2).any(|w| w[1] >= w[0]) {
            flags.push(FLAG_LEVEL_NOT_VANISHING.to_string());
        }
        flags
    }
}

/// Sequential estimate at the sample-size dependent level `alpha_n`,
/// consistent when `alpha_n -> 0` slowly enough. Violations of the rate
/// conditions are flagged, not refused.
pub fn consistent_estimate<T: Real, E: StepTest<T> + ?Sized>(engine: &E, n: usize, levels: LevelSequence) -> Result<RankEstimate<T>> {
    let alpha_n = levels.level(n as f64);
    let alpha: T = if alpha_n >= 1.0 { lit(1.0 - 1e-12) } else { lit(alpha_n) };
    let mut est = sequential_estimate(engine, alpha)?;
    est.flags = levels.check(n, 6);
    Ok(est)
}
