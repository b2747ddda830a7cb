//! Bootstrap rank tests: the statistic `tau_n^2 phi_r(Pi_hat)` against the
//! bootstrap law of an estimated second directional derivative.

use rayon::prelude::*;

use super::covariance::VecCovariance;
use super::critical::{bootstrap_p_value, critical_value};
use super::kp::{check_level, check_rank, sequential_kp_rank_with};
use super::result::{TestMethod, TestResult};
use crate::data::MatrixEstimate;
use crate::derivatives::{AnalyticDerivative, NumericalDerivative, SecondDerivative};
use crate::error::{RankError, Result};
use crate::resampling::BootstrapEnsemble;
use crate::scalar::{to_f64, Real};
use crate::spectral::{svd, SpectralDecomposition};

/// How the two-step test obtains its pre-test rank.
#[derive(Debug, Clone)]
pub enum FirstStep<'a, T: Real> {
    /// A rank computed elsewhere.
    Rank(usize),
    /// Sequential Wald testing at level `beta` with this covariance.
    SequentialKp(&'a VecCovariance<T>),
}

/// Critical value, p-value and decision from an ensemble pushed through a
/// derivative estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDecision<T: Real> {
    pub critical_value: T,
    pub p_value: T,
    pub reject: bool,
}

fn check_ensemble<T: Real>(est: &MatrixEstimate<T>, ensemble: &BootstrapEnsemble<T>) -> Result<()> {
    if ensemble.is_empty() {
        return Err(RankError::InvalidArgument("empty bootstrap ensemble".into()));
    }
    if ensemble.draws[0].shape() != est.values.shape() {
        return Err(RankError::InvalidInput("bootstrap draws do not match the estimate".into()));
    }
    Ok(())
}

/// Evaluates the derivative estimate on every draw.
pub fn bootstrap_values<T: Real>(ensemble: &BootstrapEnsemble<T>, estimator: &SecondDerivative<T>) -> Result<Vec<T>> {
    ensemble.draws.par_iter().map(|d| estimator.evaluate(d)).collect()
}

pub(crate) fn decide<T: Real>(statistic: T, values: &[T], alpha: T) -> Result<BootstrapDecision<T>> {
    let critical_value = critical_value(values, alpha)?;
    Ok(BootstrapDecision {
        critical_value,
        p_value: bootstrap_p_value(values, statistic),
        reject: statistic > critical_value,
    })
}

/// Bootstrap test with an explicitly supplied derivative estimate.
pub fn cf_test_with_estimator<T: Real>(
    est: &MatrixEstimate<T>,
    ensemble: &BootstrapEnsemble<T>,
    r: usize,
    alpha: T,
    estimator: &SecondDerivative<T>,
) -> Result<BootstrapDecision<T>> {
    check_level(alpha)?;
    check_rank(est, r)?;
    check_ensemble(est, ensemble)?;
    let statistic = est.rate * est.rate * crate::spectral::phi_r(&est.values, r)?;
    decide(statistic, &bootstrap_values(ensemble, estimator)?, alpha)
}

fn cf_result<T: Real>(
    method: TestMethod,
    est: &MatrixEstimate<T>,
    dec: &SpectralDecomposition<T>,
    ensemble: &BootstrapEnsemble<T>,
    r: usize,
    alpha: T,
    estimator: SecondDerivative<T>,
    kappa: Option<T>,
) -> Result<TestResult<T>> {
    let statistic = est.rate * est.rate * dec.phi(r);
    let decision = decide(statistic, &bootstrap_values(ensemble, &estimator)?, alpha)?;
    Ok(TestResult {
        method,
        r,
        statistic,
        critical_value: Some(decision.critical_value),
        p_value: Some(decision.p_value),
        reject: decision.reject,
        alpha,
        beta: None,
        kappa,
        estimated_rank: estimator.estimated_rank(),
        flags: Vec::new(),
    })
}

/// Bootstrap test with the plug-in derivative at the rank estimated by
/// thresholding singular values at `kappa`.
pub fn cf_analytic_test<T: Real>(
    est: &MatrixEstimate<T>,
    ensemble: &BootstrapEnsemble<T>,
    r: usize,
    alpha: T,
    kappa: T,
) -> Result<TestResult<T>> {
    check_level(alpha)?;
    check_rank(est, r)?;
    check_ensemble(est, ensemble)?;
    let dec = svd(&est.values)?;
    cf_analytic_with(est, &dec, ensemble, r, alpha, kappa)
}

pub(crate) fn cf_analytic_with<T: Real>(
    est: &MatrixEstimate<T>,
    dec: &SpectralDecomposition<T>,
    ensemble: &BootstrapEnsemble<T>,
    r: usize,
    alpha: T,
    kappa: T,
) -> Result<TestResult<T>> {
    let estimator = SecondDerivative::Analytic(AnalyticDerivative::thresholded(dec, kappa, r)?);
    cf_result(TestMethod::CfA, est, dec, ensemble, r, alpha, estimator, Some(kappa))
}

/// Bootstrap test with the finite-difference derivative, step `kappa`.
pub fn cf_numerical_test<T: Real>(
    est: &MatrixEstimate<T>,
    ensemble: &BootstrapEnsemble<T>,
    r: usize,
    alpha: T,
    kappa: T,
) -> Result<TestResult<T>> {
    check_level(alpha)?;
    check_rank(est, r)?;
    check_ensemble(est, ensemble)?;
    let dec = svd(&est.values)?;
    cf_numerical_with(est, &dec, ensemble, r, alpha, kappa)
}

pub(crate) fn cf_numerical_with<T: Real>(
    est: &MatrixEstimate<T>,
    dec: &SpectralDecomposition<T>,
    ensemble: &BootstrapEnsemble<T>,
    r: usize,
    alpha: T,
    kappa: T,
) -> Result<TestResult<T>> {
    let estimator = SecondDerivative::Numerical(NumericalDerivative::new(&est.values, kappa, r)?);
    cf_result(TestMethod::CfN, est, dec, ensemble, r, alpha, estimator, Some(kappa))
}

/// Two-step test. Rejects outright if the pre-test rank exceeds `r`;
/// otherwise runs the plug-in bootstrap test at the pre-test rank with
/// level `alpha - beta`.
pub fn cf_two_step_test<T: Real>(
    est: &MatrixEstimate<T>,
    ensemble: &BootstrapEnsemble<T>,
    r: usize,
    alpha: T,
    beta: T,
    first: FirstStep<'_, T>,
) -> Result<TestResult<T>> {
    check_level(alpha)?;
    check_rank(est, r)?;
    check_ensemble(est, ensemble)?;
    if !(beta > T::zero() && beta < alpha) {
        return Err(RankError::InvalidArgument(format!(
            "first-step level {} must lie in (0, alpha)",
            to_f64(beta)
        )));
    }
    let dec = svd(&est.values)?;
    cf_two_step_with(est, &dec, ensemble, r, alpha, beta, first)
}

pub(crate) fn cf_two_step_with<T: Real>(
    est: &MatrixEstimate<T>,
    dec: &SpectralDecomposition<T>,
    ensemble: &BootstrapEnsemble<T>,
    r: usize,
    alpha: T,
    beta: T,
    first: FirstStep<'_, T>,
) -> Result<TestResult<T>> {
    let (first_rank, flags) = match first {
        FirstStep::Rank(rank) => (rank, Vec::new()),
        FirstStep::SequentialKp(cov) => (sequential_kp_rank_with(est, dec, cov, beta)?, cov.flags.clone()),
    };
    let statistic = est.rate * est.rate * dec.phi(r);
    if first_rank > r {
        return Ok(TestResult {
            method: TestMethod::CfT,
            r,
            statistic,
            critical_value: None,
            p_value: None,
            reject: true,
            alpha,
            beta: Some(beta),
            kappa: None,
            estimated_rank: Some(first_rank),
            flags,
        });
    }
    let estimator = SecondDerivative::Analytic(AnalyticDerivative::with_rank(dec, r, first_rank)?);
    let decision = decide(statistic, &bootstrap_values(ensemble, &estimator)?, alpha - beta)?;
    Ok(TestResult {
        method: TestMethod::CfT,
        r,
        statistic,
        critical_value: Some(decision.critical_value),
        p_value: Some(decision.p_value),
        reject: decision.reject,
        alpha,
        beta: Some(beta),
        kappa: None,
        estimated_rank: Some(first_rank),
        flags,
    })
}
