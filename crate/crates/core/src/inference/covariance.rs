//! Covariance of the vectorised estimate, used by the Wald-type tests.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Contributions;
use crate::error::{RankError, Result};
use crate::resampling::cluster_sums;
use crate::scalar::{from_usize, lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceKind {
    Iid,
    /// Heteroskedasticity and autocorrelation consistent, one lag.
    HaccOneLag,
    Cluster,
    Known,
}

/// Asymptotic covariance of `sqrt(n) vec(Pi_hat)`, with the column-major
/// vectorisation used throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct VecCovariance<T: Real> {
    pub omega: DMatrix<T>,
    pub kind: CovarianceKind,
    pub flags: Vec<String>,
}

pub const FLAG_RANK_DEFICIENT: &str = "covariance-rank-deficient";
pub const FLAG_CLIPPED: &str = "covariance-eigenvalues-clipped";

impl<T: Real> VecCovariance<T> {
    /// Wraps a known covariance matrix.
    pub fn known(omega: DMatrix<T>) -> Result<Self> {
        if !omega.is_square() {
            return Err(RankError::InvalidInput("covariance must be square".into()));
        }
        if omega.iter().any(|x| !x.is_finite()) {
            return Err(RankError::InvalidInput("covariance has non-finite entries".into()));
        }
        let asym = (&omega - omega.transpose()).amax();
        if asym > lit::<T>(1e-10) * omega.amax().max(T::one()) {
            return Err(RankError::InvalidInput("covariance is not symmetric".into()));
        }
        let mut out = Self { omega, kind: CovarianceKind::Known, flags: Vec::new() };
        out.flag_rank_deficiency();
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    fn flag_rank_deficiency(&mut self) {
        let eig = SymmetricEigen::new(self.omega.clone());
        let min = eig.eigenvalues.iter().cloned().fold(T::max_value().unwrap(), |a, b| a.min(b));
        if min < lit::<T>(1e-10) * self.omega.trace() {
            self.flags.push(FLAG_RANK_DEFICIENT.into());
        }
    }
}

/// Sample covariance of the vectorised contributions, divisor `n`.
pub fn cov_iid<T: Real>(contribs: &Contributions<T>) -> Result<VecCovariance<T>> {
    let n = contribs.len();
    if n < 2 {
        return Err(RankError::InsufficientData { needed: 2, got: n });
    }
    let d = contribs.centred();
    let omega = (&d * d.transpose()) / from_usize::<T>(n);
    let mut out = VecCovariance { omega, kind: CovarianceKind::Iid, flags: Vec::new() };
    out.flag_rank_deficiency();
    Ok(out)
}

/// `Gamma_0 + Gamma_1 + Gamma_1^T` for a time-ordered sample, with negative
/// eigenvalues clipped to zero.
pub fn cov_hacc_one_lag<T: Real>(contribs: &Contributions<T>) -> Result<VecCovariance<T>> {
    let n = contribs.len();
    if n < 3 {
        return Err(RankError::InsufficientData { needed: 3, got: n });
    }
    let d = contribs.centred();
    let p = d.nrows();
    let nt = from_usize::<T>(n);
    let gamma0 = (&d * d.transpose()) / nt;
    let current = d.columns(1, n - 1);
    let lagged = d.columns(0, n - 1);
    let gamma1 = (current * lagged.transpose()) / nt;
    let raw = &gamma0 + &gamma1 + gamma1.transpose();

    let eig = SymmetricEigen::new(raw.clone());
    let mut flags = Vec::new();
    let omega = if eig.eigenvalues.iter().any(|&l| l < T::zero()) {
        flags.push(FLAG_CLIPPED.to_string());
        let clipped = eig.eigenvalues.map(|l| l.max(T::zero()));
        let mut rebuilt = DMatrix::<T>::zeros(p, p);
        for i in 0..p {
            let u = eig.eigenvectors.column(i);
            rebuilt += u * u.transpose() * clipped[i];
        }
        rebuilt
    } else {
        raw
    };
    let mut out = VecCovariance { omega, kind: CovarianceKind::HaccOneLag, flags };
    out.flag_rank_deficiency();
    Ok(out)
}

/// Cluster-robust covariance `n^{-1} sum_g (S_g - n_g Pi_hat)(S_g - n_g Pi_hat)^T`.
pub fn cov_cluster<T: Real>(contribs: &Contributions<T>, cluster_ids: &[usize]) -> Result<VecCovariance<T>> {
    let n = contribs.len();
    if cluster_ids.len() != n {
        return Err(RankError::InvalidInput("one cluster label per observation required".into()));
    }
    let (mut sums, sizes) = cluster_sums(contribs, cluster_ids);
    if sizes.len() < 2 {
        return Err(RankError::InsufficientData { needed: 2, got: sizes.len() });
    }
    let mean = contribs.mean_vec();
    for (g, mut col) in sums.column_iter_mut().enumerate() {
        col.axpy(-from_usize::<T>(sizes[g]), &mean, T::one());
    }
    let omega = (&sums * sums.transpose()) / from_usize::<T>(n);
    let mut out = VecCovariance { omega, kind: CovarianceKind::Cluster, flags: Vec::new() };
    out.flag_rank_deficiency();
    Ok(out)
}
