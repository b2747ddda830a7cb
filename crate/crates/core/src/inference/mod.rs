//! Rank tests: bootstrap tests, Wald-type tests and their ingredients.

pub mod cf;
pub mod chi2;
pub mod covariance;
pub mod critical;
pub mod kp;
pub mod result;

pub use cf::{cf_analytic_test, cf_numerical_test, cf_test_with_estimator, cf_two_step_test, BootstrapDecision, FirstStep};
pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf};
pub use covariance::{cov_cluster, cov_hacc_one_lag, cov_iid, CovarianceKind, VecCovariance};
pub use critical::{bootstrap_p_value, critical_value};
pub use kp::{kp_m_test, kp_statistic, kp_test, rs_statistic, sequential_kp_rank, KpStatistic};
pub use result::{TestMethod, TestResult};
