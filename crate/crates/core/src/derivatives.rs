//! Directional derivatives of the trailing-energy functional and their
//! estimators.
//!
//! At a matrix of rank `r0 <= r` the functional is not differentiable twice
//! in the usual sense: its second directional derivative is a non-linear,
//! non-additive function of the direction. The bootstrap feeds draws through
//! an estimate of that map.

use nalgebra::DMatrix;

use crate::error::{RankError, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::spectral::{partition, singular_values, svd, trailing_energy, SpectralDecomposition};

fn check_direction<T: Real>(pi: &DMatrix<T>, direction: &DMatrix<T>) -> Result<()> {
    if pi.shape() != direction.shape() {
        return Err(RankError::InvalidInput(format!(
            "direction is {:?} but matrix is {:?}",
            direction.shape(),
            pi.shape()
        )));
    }
    if direction.iter().any(|x| !x.is_finite()) {
        return Err(RankError::InvalidInput("direction has non-finite entries".into()));
    }
    Ok(())
}

/// First directional derivative of `phi_r` at `pi` in direction `direction`.
///
/// Zero when `phi_r(pi)` is (numerically) zero. Otherwise it is
/// `2 tr(Q2^T pi^T M Q2)` with `Q2` the trailing right singular vectors,
/// which is only well defined if `sigma_r > sigma_{r+1}`. A tie returns
/// [`RankError::DegenerateSubspace`] carrying the value computed from the
/// arbitrary basis the decomposition happened to pick.
pub fn first_derivative<T: Real>(pi: &DMatrix<T>, direction: &DMatrix<T>, r: usize) -> Result<T> {
    check_direction(pi, direction)?;
    let k = pi.ncols();
    if r >= k {
        return Err(RankError::InvalidArgument(format!("rank {r} must be below {k}")));
    }
    let dec = svd(pi)?;
    if dec.phi(r) < lit(1e-12) {
        return Ok(T::zero());
    }
    let q2 = partition(&dec, r)?.q2;
    let value = (q2.transpose() * pi.transpose() * direction * &q2).trace() * lit(2.0);
    if r > 0 {
        let s = &dec.singular_values;
        let gap = s[r - 1] - s[r];
        if gap < s[0] * lit(1e-8) {
            return Err(RankError::DegenerateSubspace {
                split: r,
                gap: to_f64(gap),
                candidate: to_f64(value),
            });
        }
    }
    Ok(value)
}

/// Second directional derivative at a matrix of rank `r0`:
/// the sum of the squared singular values of `P2^T M Q2` past position
/// `r - r0`, where `P2`, `Q2` span the null spaces at split `r0`.
pub fn second_derivative_analytic<T: Real>(
    p2: &DMatrix<T>,
    q2: &DMatrix<T>,
    direction: &DMatrix<T>,
    r: usize,
    r0: usize,
) -> Result<T> {
    if r0 > r {
        return Err(RankError::InvalidArgument(format!("split {r0} exceeds rank {r}")));
    }
    if p2.nrows() != direction.nrows() || q2.nrows() != direction.ncols() {
        return Err(RankError::InvalidInput("direction does not match the bases".into()));
    }
    if q2.ncols() == 0 {
        return Ok(T::zero());
    }
    let projected = p2.transpose() * direction * q2;
    if r == r0 {
        return Ok(projected.norm_squared());
    }
    Ok(trailing_energy(&singular_values(&projected)?, r - r0))
}

/// Finite-difference second derivative
/// `(phi_r(pi_hat + kappa M) - phi_r(pi_hat)) / kappa^2`. Not clamped: it
/// can be negative in finite samples.
pub fn second_derivative_numerical<T: Real>(
    pi_hat: &DMatrix<T>,
    direction: &DMatrix<T>,
    kappa: T,
    r: usize,
) -> Result<T> {
    NumericalDerivative::new(pi_hat, kappa, r)?.evaluate(direction)
}

/// Number of leading singular values at or above `kappa`, capped at `cap`.
pub fn threshold_rank<T: Real>(sorted_singular_values: &[T], kappa: T, cap: usize) -> usize {
    sorted_singular_values.iter().take(cap).take_while(|&&s| s >= kappa).count()
}

/// Plug-in estimate of the second directional derivative, using an
/// estimated rank and the singular vectors of the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticDerivative<T: Real> {
    pub r: usize,
    pub estimated_rank: usize,
    p2t: DMatrix<T>,
    q2: DMatrix<T>,
}

impl<T: Real> AnalyticDerivative<T> {
    /// Uses the split `estimated_rank` of an existing decomposition.
    pub fn with_rank(dec: &SpectralDecomposition<T>, r: usize, estimated_rank: usize) -> Result<Self> {
        if r >= dec.cols() {
            return Err(RankError::InvalidArgument(format!("rank {r} must be below {}", dec.cols())));
        }
        if estimated_rank > r {
            return Err(RankError::InvalidArgument(format!(
                "estimated rank {estimated_rank} exceeds {r}"
            )));
        }
        let blocks = partition(dec, estimated_rank)?;
        Ok(Self { r, estimated_rank, p2t: blocks.p2.transpose(), q2: blocks.q2 })
    }

    /// Estimates the rank by thresholding singular values at `kappa`.
    pub fn thresholded(dec: &SpectralDecomposition<T>, kappa: T, r: usize) -> Result<Self> {
        check_kappa(kappa)?;
        let r_hat = threshold_rank(dec.singular_values.as_slice(), kappa, r);
        Self::with_rank(dec, r, r_hat)
    }

    pub fn evaluate(&self, direction: &DMatrix<T>) -> Result<T> {
        if direction.nrows() != self.p2t.ncols() || direction.ncols() != self.q2.nrows() {
            return Err(RankError::InvalidInput("direction does not match the estimate".into()));
        }
        if self.q2.ncols() == 0 {
            return Ok(T::zero());
        }
        let projected = &self.p2t * direction * &self.q2;
        if self.r == self.estimated_rank {
            return Ok(projected.norm_squared());
        }
        Ok(trailing_energy(&singular_values(&projected)?, self.r - self.estimated_rank))
    }
}

/// Finite-difference estimate with step `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericalDerivative<T: Real> {
    pub r: usize,
    pub kappa: T,
    base: DMatrix<T>,
    base_phi: T,
}

impl<T: Real> NumericalDerivative<T> {
    pub fn new(pi_hat: &DMatrix<T>, kappa: T, r: usize) -> Result<Self> {
        check_kappa(kappa)?;
        if r >= pi_hat.ncols() {
            return Err(RankError::InvalidArgument(format!(
                "rank {r} must be below {}",
                pi_hat.ncols()
            )));
        }
        let base_phi = trailing_energy(&singular_values(pi_hat)?, r);
        Ok(Self { r, kappa, base: pi_hat.clone(), base_phi })
    }

    pub fn evaluate(&self, direction: &DMatrix<T>) -> Result<T> {
        check_direction(&self.base, direction)?;
        let shifted = &self.base + direction * self.kappa;
        let phi = trailing_energy(&singular_values(&shifted)?, self.r);
        Ok((phi - self.base_phi) / (self.kappa * self.kappa))
    }
}

/// Either estimator of the second directional derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum SecondDerivative<T: Real> {
    Analytic(AnalyticDerivative<T>),
    Numerical(NumericalDerivative<T>),
}

impl<T: Real> SecondDerivative<T> {
    pub fn evaluate(&self, direction: &DMatrix<T>) -> Result<T> {
        match self {
            Self::Analytic(a) => a.evaluate(direction),
            Self::Numerical(n) => n.evaluate(direction),
        }
    }

    pub fn estimated_rank(&self) -> Option<usize> {
        match self {
            Self::Analytic(a) => Some(a.estimated_rank),
            Self::Numerical(_) => None,
        }
    }
}

fn check_kappa<T: Real>(kappa: T) -> Result<()> {
    if kappa > T::zero() && kappa.is_finite() {
        Ok(())
    } else {
        Err(RankError::InvalidArgument("tuning parameter kappa must be positive".into()))
    }
}
