//! Bootstrap inference on the rank of a matrix estimated from data.
//!
//! The statistic is the sum of squared trailing singular values of the
//! estimate. Its limiting law under the null is non-standard and depends on
//! the unknown local structure of the matrix, so critical values come from a
//! bootstrap combined with an estimate of the directional second derivative.

pub mod data;
pub mod derivatives;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod resampling;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod spectral;

pub use error::{RankError, Result};
pub use scalar::Real;
pub use data::{Contributions, MatrixEstimate};
pub use derivatives::{
    first_derivative, second_derivative_analytic, second_derivative_numerical, threshold_rank, AnalyticDerivative,
    NumericalDerivative, SecondDerivative,
};
pub use estimation::{
    consistent_estimate, sequential_estimate, CfEngine, DerivativeKind, KpEngine, LevelSequence, RankEstimate, StepOutcome,
    StepTest,
};
pub use inference::{
    bootstrap_p_value, cf_analytic_test, cf_numerical_test, cf_two_step_test, chi2_quantile, cov_cluster,
    cov_hacc_one_lag, cov_iid, critical_value, kp_m_test, kp_statistic, kp_test, rs_statistic, sequential_kp_rank,
    CovarianceKind, FirstStep, TestMethod, TestResult, VecCovariance,
};
pub use resampling::{draw_circular_block, draw_cluster, draw_empirical, BootstrapEnsemble, Scheme};
pub use spectral::{partition, phi_r, singular_values, svd, SpectralDecomposition, SubspaceBlocks};

pub type SpectralDecompositionF64 = SpectralDecomposition<f64>;
pub type SpectralDecompositionF32 = SpectralDecomposition<f32>;
pub type MatrixEstimateF64 = MatrixEstimate<f64>;
pub type ContributionsF64 = Contributions<f64>;
pub type BootstrapEnsembleF64 = BootstrapEnsemble<f64>;
pub type VecCovarianceF64 = VecCovariance<f64>;
pub type TestResultF64 = TestResult<f64>;
pub type RankEstimateF64 = RankEstimate<f64>;
