//! Wald-type rank tests with chi-square critical values.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::chi2::{chi2_quantile, chi2_sf};
use super::covariance::VecCovariance;
use super::result::{TestMethod, TestResult};
use crate::data::MatrixEstimate;
use crate::error::{RankError, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::spectral::{partition, svd, SpectralDecomposition};

pub const FLAG_PSEUDO_INVERSE: &str = "pseudo-inverse";
const MAX_CONDITION: f64 = 1e12;

/// Wald statistic for rank `r` and its degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct KpStatistic<T: Real> {
    pub value: T,
    pub df: usize,
    pub flags: Vec<String>,
}

pub(crate) fn check_level<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(RankError::InvalidArgument(format!("level {} must lie in (0, 1)", to_f64(alpha))))
    }
}

pub(crate) fn check_rank<T: Real>(est: &MatrixEstimate<T>, r: usize) -> Result<()> {
    if r >= est.cols() {
        return Err(RankError::InvalidArgument(format!("rank {r} must be below {}", est.cols())));
    }
    Ok(())
}

/// `n vec(S2)^T [(Q2 (x) P2)^T Omega (Q2 (x) P2)]^{-1} vec(S2)` with `S2` the
/// trailing block of singular values of the estimate.
///
/// When the middle matrix has condition number above 1e12 a pseudo-inverse
/// is used and the result is flagged.
pub fn kp_statistic<T: Real>(est: &MatrixEstimate<T>, cov: &VecCovariance<T>, r: usize) -> Result<KpStatistic<T>> {
    kp_statistic_with(est, &svd(&est.values)?, cov, r)
}

pub(crate) fn kp_statistic_with<T: Real>(
    est: &MatrixEstimate<T>,
    dec: &SpectralDecomposition<T>,
    cov: &VecCovariance<T>,
    r: usize,
) -> Result<KpStatistic<T>> {
    check_rank(est, r)?;
    let (m, k) = (est.rows(), est.cols());
    if cov.dim() != m * k {
        return Err(RankError::InvalidInput(format!(
            "covariance is {0}x{0} but the estimate has {1} entries",
            cov.dim(),
            m * k
        )));
    }
    let blocks = partition(dec, r)?;
    let basis = blocks.q2.kronecker(&blocks.p2);
    let vec_pi = DVector::from_column_slice(est.values.as_slice());
    let trailing = basis.transpose() * vec_pi;
    let middle: DMatrix<T> = basis.transpose() * &cov.omega * &basis;
    let middle = (&middle + middle.transpose()) * lit::<T>(0.5);

    let eig = SymmetricEigen::new(middle);
    let max = eig.eigenvalues.iter().cloned().fold(T::zero(), |a, b| a.max(b));
    let min = eig.eigenvalues.iter().cloned().fold(max, |a, b| a.min(b));
    let mut flags = cov.flags.clone();
    if !(max > T::zero()) {
        return Err(RankError::Numerical("covariance of the trailing block is zero".into()));
    }
    let ill = !(min > T::zero()) || max / min > lit(MAX_CONDITION);
    if ill {
        flags.push(FLAG_PSEUDO_INVERSE.into());
    }
    let cutoff = if ill { max / lit(MAX_CONDITION) } else { T::zero() };
    let coords = eig.eigenvectors.transpose() * trailing;
    let mut quad = T::zero();
    for (c, &l) in coords.iter().zip(eig.eigenvalues.iter()) {
        if l > cutoff {
            quad += *c * *c / l;
        }
    }
    Ok(KpStatistic { value: est.rate * est.rate * quad, df: (m - r) * (k - r), flags })
}

/// `tau_n^2 phi_r(Pi_hat)`, the statistic shared by the bootstrap tests.
pub fn rs_statistic<T: Real>(est: &MatrixEstimate<T>, r: usize) -> Result<T> {
    check_rank(est, r)?;
    Ok(est.rate * est.rate * crate::spectral::phi_r(&est.values, r)?)
}

/// Wald test of `rank <= r` at level `alpha`.
pub fn kp_test<T: Real>(est: &MatrixEstimate<T>, cov: &VecCovariance<T>, r: usize, alpha: T) -> Result<TestResult<T>> {
    check_level(alpha)?;
    kp_test_with(est, &svd(&est.values)?, cov, r, alpha)
}

pub(crate) fn kp_test_with<T: Real>(
    est: &MatrixEstimate<T>,
    dec: &SpectralDecomposition<T>,
    cov: &VecCovariance<T>,
    r: usize,
    alpha: T,
) -> Result<TestResult<T>> {
    let stat = kp_statistic_with(est, dec, cov, r)?;
    let critical: T = lit(chi2_quantile(1.0 - to_f64(alpha), stat.df));
    let p: T = lit(chi2_sf(to_f64(stat.value), stat.df));
    Ok(TestResult {
        method: TestMethod::Kp,
        r,
        statistic: stat.value,
        critical_value: Some(critical),
        p_value: Some(p),
        reject: stat.value > critical,
        alpha,
        beta: None,
        kappa: None,
        estimated_rank: None,
        flags: stat.flags,
    })
}

/// Runs the Wald test at every rank `0..=r` and rejects only if all do.
/// Reports the statistic at `r` and the largest p-value.
pub fn kp_m_test<T: Real>(est: &MatrixEstimate<T>, cov: &VecCovariance<T>, r: usize, alpha: T) -> Result<TestResult<T>> {
    check_level(alpha)?;
    check_rank(est, r)?;
    let dec = svd(&est.values)?;
    let mut reject = true;
    let mut p_max = T::zero();
    let mut flags = Vec::new();
    let mut last = None;
    for j in 0..=r {
        let res = kp_test_with(est, &dec, cov, j, alpha)?;
        reject &= res.reject;
        p_max = p_max.max(res.p_value.unwrap_or(T::one()));
        for f in &res.flags {
            if !flags.contains(f) {
                flags.push(f.clone());
            }
        }
        last = Some(res);
    }
    let last = last.expect("at least one step");
    Ok(TestResult {
        method: TestMethod::KpM,
        r,
        statistic: last.statistic,
        critical_value: last.critical_value,
        p_value: Some(p_max),
        reject,
        alpha,
        beta: None,
        kappa: None,
        estimated_rank: None,
        flags,
    })
}

/// Sequential Wald estimate of the rank at level `alpha`: the first `j`
/// not rejected, or `k` if every `j < k` is rejected.
pub fn sequential_kp_rank<T: Real>(est: &MatrixEstimate<T>, cov: &VecCovariance<T>, alpha: T) -> Result<usize> {
    let dec = svd(&est.values)?;
    sequential_kp_rank_with(est, &dec, cov, alpha)
}

pub(crate) fn sequential_kp_rank_with<T: Real>(
    est: &MatrixEstimate<T>,
    dec: &SpectralDecomposition<T>,
    cov: &VecCovariance<T>,
    alpha: T,
) -> Result<usize> {
    check_level(alpha)?;
    for j in 0..est.cols() {
        let res = kp_test_with(est, dec, cov, j, alpha).map_err(|e| RankError::Step { step: j, source: Box::new(e) })?;
        if !res.reject {
            return Ok(j);
        }
    }
    Ok(est.cols())
}
