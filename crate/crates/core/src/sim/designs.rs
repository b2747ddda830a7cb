//! Data-generating processes for the simulation studies.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Contributions;
use crate::error::{RankError, Result};

/// Covariance of `vec(Z)` in the 2x2 direct-observation design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaChoice {
    /// Identity.
    Identity,
    /// Unequal variances (1, 1, 5, 5) with correlation 0.9 between
    /// entries (1,1)/(2,2) and (2,1)/(1,2).
    Correlated,
}

impl OmegaChoice {
    pub fn matrix(self) -> DMatrix<f64> {
        match self {
            Self::Identity => DMatrix::identity(4, 4),
            Self::Correlated => {
                let c = 0.9 * 5f64.sqrt();
                DMatrix::from_row_slice(
                    4,
                    4,
                    &[1.0, 0.0, 0.0, -c, 0.0, 1.0, c, 0.0, 0.0, c, 5.0, 0.0, -c, 0.0, 0.0, 5.0],
                )
            }
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Correlated => "correlated",
        }
    }
}

/// A simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Design {
    /// `Z = Pi0^T V + u` with `V, u ~ N(0, I_k)` i.i.d. and
    /// `Pi0 = diag(1_{k-d}, 0_d) + delta I_k`.
    LinearIid { k: usize, d: usize, delta: f64 },
    /// `vec(Z) ~ N(delta Omega^{1/2} vec(I_2), Omega)`, observed directly.
    GaussianDirect { omega: OmegaChoice, delta: f64 },
    /// `Z_t = Pi0^T V_t + V_{1,t} u_t` with MA(1) errors
    /// `u_t = e_t - (1/4) 1 1^T e_{t-1}` and `Pi0 = diag(1, 1, 0, 0) + delta I_4`.
    HeteroMa { delta: f64 },
}

impl Design {
    pub fn validate(&self) -> Result<()> {
        let delta = self.delta();
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(RankError::InvalidArgument(format!("delta {delta} must be non-negative")));
        }
        if let Self::LinearIid { k, d, .. } = *self {
            if k == 0 || d == 0 || d > k {
                return Err(RankError::InvalidArgument(format!("need 1 <= d <= k, got d={d}, k={k}")));
            }
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        match *self {
            Self::LinearIid { delta, .. } | Self::GaussianDirect { delta, .. } | Self::HeteroMa { delta } => delta,
        }
    }

    /// Stable identifier, also used to derive seeds.
    pub fn label(&self) -> String {
        match *self {
            Self::LinearIid { k, d, .. } => format!("linear-iid-k{k}-d{d}"),
            Self::GaussianDirect { omega, .. } => format!("gaussian-direct-{}", omega.label()),
            Self::HeteroMa { .. } => "hetero-ma".to_string(),
        }
    }

    /// `(m, k)`.
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            Self::LinearIid { k, .. } => (k, k),
            Self::GaussianDirect { .. } => (2, 2),
            Self::HeteroMa { .. } => (4, 4),
        }
    }

    /// Whether observations are serially dependent.
    pub fn time_ordered(&self) -> bool {
        matches!(self, Self::HeteroMa { .. })
    }

    /// Population matrix.
    pub fn true_matrix(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        Ok(match *self {
            Self::LinearIid { k, d, delta } => {
                DMatrix::from_fn(k, k, |i, j| if i == j { delta + if i < k - d { 1.0 } else { 0.0 } } else { 0.0 })
            }
            Self::GaussianDirect { omega, delta } => {
                let root = symmetric_sqrt(&omega.matrix())?;
                let mean = root * DVector::from_column_slice(&[1.0, 0.0, 0.0, 1.0]) * delta;
                DMatrix::from_column_slice(2, 2, mean.as_slice())
            }
            Self::HeteroMa { delta } => {
                DMatrix::from_fn(4, 4, |i, j| if i == j { delta + if i < 2 { 1.0 } else { 0.0 } } else { 0.0 })
            }
        })
    }

    /// Rank of the population matrix.
    pub fn true_rank(&self) -> Result<usize> {
        let pi = self.true_matrix()?;
        let s = crate::spectral::singular_values(&pi)?;
        Ok(s.iter().filter(|&&x| x > 1e-10 * s[0].max(1.0)).count())
    }

    /// Draws a sample of size `n` and returns its contributions.
    pub fn contributions<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Contributions<f64>> {
        self.validate()?;
        match *self {
            Self::LinearIid { k, d, delta } => {
                let (v, z) = gen_linear_iid(k, d, delta, n, rng)?;
                Contributions::from_pairs(&v, &z)
            }
            Self::GaussianDirect { omega, delta } => {
                Contributions::from_matrices(&gen_gaussian_direct(&omega.matrix(), delta, n, rng)?)
            }
            Self::HeteroMa { delta } => {
                let (v, z) = gen_hetero_ma(delta, n, rng)?;
                Contributions::from_pairs(&v, &z)
            }
        }
    }
}

fn normal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // Filled row by row so row i of the sample only depends on draws up to i.
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = rng.sample(StandardNormal);
        }
    }
    out
}

/// `n` i.i.d. pairs from the linear design; rows of the returned `(V, Z)`.
pub fn gen_linear_iid<R: Rng>(k: usize, d: usize, delta: f64, n: usize, rng: &mut R) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let design = Design::LinearIid { k, d, delta };
    let pi0 = design.true_matrix()?;
    let v = normal_matrix(n, k, rng);
    let u = normal_matrix(n, k, rng);
    // Row form of Z_i = Pi0^T V_i + u_i.
    let z = &v * &pi0 + u;
    Ok((v, z))
}

/// `n` i.i.d. 2x2 matrices with `vec(Z) ~ N(delta Omega^{1/2} vec(I_2), Omega)`.
pub fn gen_gaussian_direct<R: Rng>(omega: &DMatrix<f64>, delta: f64, n: usize, rng: &mut R) -> Result<Vec<DMatrix<f64>>> {
    if omega.shape() != (4, 4) {
        return Err(RankError::InvalidArgument("covariance must be 4x4".into()));
    }
    let chol = omega
        .clone()
        .cholesky()
        .ok_or_else(|| RankError::InvalidArgument("covariance is not positive definite".into()))?;
    let mean = symmetric_sqrt(omega)? * DVector::from_column_slice(&[1.0, 0.0, 0.0, 1.0]) * delta;
    let l = chol.l();
    Ok((0..n)
        .map(|_| {
            let xi = DVector::from_iterator(4, (0..4).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let x = &mean + &l * xi;
            DMatrix::from_column_slice(2, 2, x.as_slice())
        })
        .collect())
}

/// Time series of `n` pairs from the heteroskedastic MA(1) design.
pub fn gen_hetero_ma<R: Rng>(delta: f64, n: usize, rng: &mut R) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let pi0 = Design::HeteroMa { delta }.true_matrix()?;
    let v = normal_matrix(n, 4, rng);
    let eps = normal_matrix(n + 1, 4, rng);
    let u = ma_errors(&eps);
    let mut z = &v * &pi0;
    for t in 0..n {
        let scale = v[(t, 0)];
        for j in 0..4 {
            z[(t, j)] += scale * u[(t, j)];
        }
    }
    Ok((v, z))
}

/// `u_t = e_t - (1/4) 1 1^T e_{t-1}` from `n + 1` innovations (rows).
fn ma_errors(eps: &DMatrix<f64>) -> DMatrix<f64> {
    let n = eps.nrows() - 1;
    DMatrix::from_fn(n, eps.ncols(), |t, j| eps[(t + 1, j)] - 0.25 * eps.row(t).sum())
}

/// Symmetric positive semi-definite square root.
pub fn symmetric_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    if eig.eigenvalues.iter().any(|&l| l < -1e-12) {
        return Err(RankError::InvalidArgument("matrix is not positive semi-definite".into()));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}
