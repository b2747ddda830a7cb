//! Deterministic Monte Carlo engine for rejection rates and rank
//! distributions.
//!
//! Replication `i` draws its data from a stream keyed by
//! `(master seed, design, n, i)` and its bootstrap from a child stream, so
//! results do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::designs::Design;
use super::emit::{RankHistogram, RejectionRow, RejectionTable};
use crate::data::Contributions;
use crate::derivatives::threshold_rank;
use crate::error::{RankError, Result};
use crate::estimation::{sequential_estimate, CfEngine, DerivativeKind, KpEngine};
use crate::inference::cf::{cf_analytic_with, cf_numerical_with, cf_two_step_with, FirstStep};
use crate::inference::covariance::{cov_hacc_one_lag, cov_iid, VecCovariance};
use crate::inference::kp::{kp_m_test, kp_test_with};
use crate::resampling::{draw_circular_block, draw_empirical, BootstrapEnsemble};
use crate::rng::{derive_seed, label_hash, stream_rng};
use crate::spectral::svd;

/// Tuning rule for `kappa_n`: `scale * n^(-exponent)` or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaRule {
    Power { scale: f64, exponent: f64 },
    Fixed(f64),
}

impl KappaRule {
    /// `n^(-exponent)`.
    pub fn power(exponent: f64) -> Self {
        Self::Power { scale: 1.0, exponent }
    }

    pub fn value(&self, n: usize) -> f64 {
        match *self {
            Self::Power { scale, exponent } => scale * (n as f64).powf(-exponent),
            Self::Fixed(k) => k,
        }
    }
}

fn exponent_label(e: f64) -> String {
    for den in 1..=10u32 {
        let num = e * den as f64;
        if (num - num.round()).abs() < 1e-9 {
            let num = num.round() as i64;
            return if den == 1 { format!("{num}") } else { format!("{num}/{den}") };
        }
    }
    format!("{e}")
}

impl std::fmt::Display for KappaRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Self::Power { scale, exponent } if scale == 1.0 => write!(f, "n^(-{})", exponent_label(exponent)),
            Self::Power { scale, exponent } => write!(f, "{scale}n^(-{})", exponent_label(exponent)),
            Self::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for KappaRule {
    type Err = String;

    /// Accepts `n^(-1/4)`, `n^-0.25`, `1.5n^(-1/3)`, `1.5*n^(-1/3)` or a
    /// plain positive number.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(pos) = t.find("n^") {
            let scale_part = t[..pos].trim_end_matches('*');
            let scale = if scale_part.is_empty() {
                1.0
            } else {
                scale_part.parse::<f64>().map_err(|_| format!("bad scale in '{s}'"))?
            };
            let exp_part = t[pos + 2..].trim_start_matches('(').trim_end_matches(')');
            let exp_part = exp_part.strip_prefix('-').ok_or_else(|| format!("exponent must be negative in '{s}'"))?;
            let exponent = match exp_part.split_once('/') {
                Some((a, b)) => {
                    let a: f64 = a.parse().map_err(|_| format!("bad exponent in '{s}'"))?;
                    let b: f64 = b.parse().map_err(|_| format!("bad exponent in '{s}'"))?;
                    a / b
                }
                None => exp_part.parse().map_err(|_| format!("bad exponent in '{s}'"))?,
            };
            if !(scale > 0.0 && exponent > 0.0 && scale.is_finite() && exponent.is_finite()) {
                return Err(format!("scale and exponent must be positive in '{s}'"));
            }
            Ok(Self::Power { scale, exponent })
        } else {
            let v: f64 = t.parse().map_err(|_| format!("cannot parse kappa '{s}'"))?;
            if v > 0.0 && v.is_finite() {
                Ok(Self::Fixed(v))
            } else {
                Err(format!("kappa must be positive, got '{s}'"))
            }
        }
    }
}

/// A test and its tuning, as one column of a rejection table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodSpec {
    CfA { kappa: KappaRule },
    CfN { kappa: KappaRule },
    /// Two-step test with first-step level `alpha / beta_divisor`.
    CfT { beta_divisor: f64 },
    Kp,
    KpM,
}

impl MethodSpec {
    pub fn label(&self) -> &'static str {
        match self {
            Self::CfA { .. } => "cf-a",
            Self::CfN { .. } => "cf-n",
            Self::CfT { .. } => "cf-t",
            Self::Kp => "kp",
            Self::KpM => "kp-m",
        }
    }

    pub fn tuning(&self) -> String {
        match self {
            Self::CfA { kappa } | Self::CfN { kappa } => format!("kappa={kappa}"),
            Self::CfT { beta_divisor } => format!("beta=alpha/{beta_divisor}"),
            Self::Kp | Self::KpM => String::new(),
        }
    }

    fn needs_covariance(&self) -> bool {
        matches!(self, Self::Kp | Self::KpM | Self::CfT { .. })
    }

    fn needs_bootstrap(&self) -> bool {
        matches!(self, Self::CfA { .. } | Self::CfN { .. } | Self::CfT { .. })
    }
}

/// Sequential rank estimator evaluated by [`rank_distribution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankEstimator {
    /// Sequential bootstrap tests with the plug-in derivative.
    CfA { kappa: KappaRule },
    /// Sequential bootstrap tests with the finite-difference derivative.
    CfN { kappa: KappaRule },
    /// Sequential Wald tests.
    Kp,
    /// Number of singular values at or above `kappa`.
    Threshold { kappa: KappaRule },
}

impl RankEstimator {
    pub fn label(&self) -> String {
        match self {
            Self::CfA { kappa } => format!("cf-a(kappa={kappa})"),
            Self::CfN { kappa } => format!("cf-n(kappa={kappa})"),
            Self::Kp => "kp".to_string(),
            Self::Threshold { kappa } => format!("threshold(kappa={kappa})"),
        }
    }

    fn needs_bootstrap(&self) -> bool {
        matches!(self, Self::CfA { .. } | Self::CfN { .. })
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Hypothesised rank for rejection tables.
    pub r: usize,
    /// Test level; also the per-step level of sequential estimators.
    pub alpha: f64,
    /// Bootstrap draws per replication.
    pub draws: usize,
    pub replications: usize,
    pub seed: u64,
    /// Block size for time-ordered designs.
    pub block_size: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { r: 1, alpha: 0.05, draws: 500, replications: 2000, seed: 0, block_size: 2 }
    }
}

/// Seed of replication `rep` for `design` at sample size `n`.
pub fn replication_seed(seed: u64, design: &Design, n: usize, rep: usize) -> u64 {
    derive_seed(seed, &[label_hash(&design.label()), n as u64, rep as u64])
}

/// Runs `f` for every replication index in parallel, keeping index order
/// and tagging errors with the replication that raised them.
pub fn run_replications<O, F>(replications: usize, f: F) -> Result<Vec<O>>
where
    O: Send,
    F: Fn(usize) -> Result<O> + Sync,
{
    if replications == 0 {
        return Err(RankError::InvalidArgument("at least one replication required".into()));
    }
    (0..replications)
        .into_par_iter()
        .map(|i| f(i).map_err(|e| RankError::Replication { index: i, source: Box::new(e) }))
        .collect()
}

/// One row per method from per-replication rejection indicators.
pub fn rejection_rows(
    design: &Design,
    n: usize,
    methods: &[MethodSpec],
    outcomes: &[Vec<bool>],
) -> Vec<RejectionRow> {
    let reps = outcomes.len();
    methods
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let hits = outcomes.iter().filter(|o| o[j]).count();
            RejectionRow::new(design.label(), n, design.delta(), m.label().to_string(), m.tuning(), hits, reps)
        })
        .collect()
}

struct Replication {
    contribs: Contributions<f64>,
    boot_seed: u64,
}

fn replicate(design: &Design, n: usize, cfg: &McConfig, rep: usize) -> Result<Replication> {
    let rep_seed = replication_seed(cfg.seed, design, n, rep);
    let contribs = design.contributions(n, &mut stream_rng(rep_seed, 0))?;
    Ok(Replication { contribs, boot_seed: derive_seed(rep_seed, &[1]) })
}

fn covariance_for(design: &Design, c: &Contributions<f64>) -> Result<VecCovariance<f64>> {
    if design.time_ordered() {
        cov_hacc_one_lag(c)
    } else {
        cov_iid(c)
    }
}

fn ensemble_for(design: &Design, c: &Contributions<f64>, cfg: &McConfig, seed: u64) -> Result<BootstrapEnsemble<f64>> {
    if design.time_ordered() {
        draw_circular_block(c, cfg.block_size, cfg.draws, seed)
    } else {
        draw_empirical(c, cfg.draws, seed)
    }
}

fn check_config(design: &Design, n: usize, cfg: &McConfig) -> Result<()> {
    design.validate()?;
    if n < 3 {
        return Err(RankError::InsufficientData { needed: 3, got: n });
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(RankError::InvalidArgument(format!("level {} must lie in (0, 1)", cfg.alpha)));
    }
    Ok(())
}

/// Rejection indicators of every method on one replication.
pub fn evaluate_replication(design: &Design, n: usize, methods: &[MethodSpec], cfg: &McConfig, rep: usize) -> Result<Vec<bool>> {
    let Replication { contribs, boot_seed } = replicate(design, n, cfg, rep)?;
    let est = contribs.estimate()?;
    let dec = svd(&est.values)?;
    let cov = if methods.iter().any(MethodSpec::needs_covariance) {
        Some(covariance_for(design, &contribs)?)
    } else {
        None
    };
    let ens = if methods.iter().any(MethodSpec::needs_bootstrap) {
        Some(ensemble_for(design, &contribs, cfg, boot_seed)?)
    } else {
        None
    };
    let (r, alpha) = (cfg.r, cfg.alpha);
    methods
        .iter()
        .map(|m| {
            let res = match *m {
                MethodSpec::CfA { kappa } => cf_analytic_with(&est, &dec, ens.as_ref().unwrap(), r, alpha, kappa.value(n))?,
                MethodSpec::CfN { kappa } => cf_numerical_with(&est, &dec, ens.as_ref().unwrap(), r, alpha, kappa.value(n))?,
                MethodSpec::CfT { beta_divisor } => {
                    let cov = cov.as_ref().unwrap();
                    cf_two_step_with(&est, &dec, ens.as_ref().unwrap(), r, alpha, alpha / beta_divisor, FirstStep::SequentialKp(cov))?
                }
                MethodSpec::Kp => kp_test_with(&est, &dec, cov.as_ref().unwrap(), r, alpha)?,
                MethodSpec::KpM => kp_m_test(&est, cov.as_ref().unwrap(), r, alpha)?,
            };
            Ok(res.reject)
        })
        .collect()
}

/// Rejection frequencies of `methods` testing `rank <= cfg.r` on `design`
/// at sample size `n`.
pub fn run_monte_carlo(design: &Design, n: usize, methods: &[MethodSpec], cfg: &McConfig) -> Result<RejectionTable> {
    check_config(design, n, cfg)?;
    let (_, k) = design.dims();
    if cfg.r >= k {
        return Err(RankError::InvalidArgument(format!("rank {} must be below {k}", cfg.r)));
    }
    if let Some(MethodSpec::CfT { beta_divisor }) = methods.iter().find(|m| matches!(m, MethodSpec::CfT { .. })) {
        if !(*beta_divisor > 1.0) {
            return Err(RankError::InvalidArgument("beta divisor must exceed 1".into()));
        }
    }
    let outcomes = run_replications(cfg.replications, |rep| evaluate_replication(design, n, methods, cfg, rep))?;
    Ok(RejectionTable { rows: rejection_rows(design, n, methods, &outcomes) })
}

/// Estimated ranks of every estimator on one replication.
pub fn estimate_replication(design: &Design, n: usize, estimators: &[RankEstimator], cfg: &McConfig, rep: usize) -> Result<Vec<usize>> {
    let Replication { contribs, boot_seed } = replicate(design, n, cfg, rep)?;
    let est = contribs.estimate()?;
    let k = est.cols();
    let ens = if estimators.iter().any(RankEstimator::needs_bootstrap) {
        Some(ensemble_for(design, &contribs, cfg, boot_seed)?)
    } else {
        None
    };
    let cov = if estimators.contains(&RankEstimator::Kp) { Some(covariance_for(design, &contribs)?) } else { None };
    let mut sv: Option<Vec<f64>> = None;
    estimators
        .iter()
        .map(|e| match *e {
            RankEstimator::CfA { kappa } => {
                let engine = CfEngine::new(&est, ens.as_ref().unwrap(), DerivativeKind::Analytic { kappa: kappa.value(n) })?;
                Ok(sequential_estimate(&engine, cfg.alpha)?.rank)
            }
            RankEstimator::CfN { kappa } => {
                let engine = CfEngine::new(&est, ens.as_ref().unwrap(), DerivativeKind::Numerical { kappa: kappa.value(n) })?;
                Ok(sequential_estimate(&engine, cfg.alpha)?.rank)
            }
            RankEstimator::Kp => {
                let engine = KpEngine::new(&est, cov.as_ref().unwrap())?;
                Ok(sequential_estimate(&engine, cfg.alpha)?.rank)
            }
            RankEstimator::Threshold { kappa } => {
                if sv.is_none() {
                    sv = Some(crate::spectral::singular_values(&est.values)?);
                }
                Ok(threshold_rank(sv.as_ref().unwrap(), kappa.value(n), k))
            }
        })
        .collect()
}

/// Histograms of the estimated rank over `0..=k` from per-replication
/// estimates.
pub fn histograms_from(design: &Design, n: usize, labels: &[String], estimates: &[Vec<usize>]) -> Vec<RankHistogram> {
    let (_, k) = design.dims();
    labels
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let mut counts = vec![0usize; k + 1];
            for e in estimates {
                counts[e[j].min(k)] += 1;
            }
            RankHistogram {
                design: design.label(),
                n,
                delta: design.delta(),
                estimator: label.clone(),
                counts,
                replications: estimates.len(),
            }
        })
        .collect()
}

/// Distribution of each estimator across replications, all estimators
/// sharing the same simulated samples and bootstrap draws.
pub fn rank_distribution(design: &Design, n: usize, estimators: &[RankEstimator], cfg: &McConfig) -> Result<Vec<RankHistogram>> {
    check_config(design, n, cfg)?;
    let estimates = run_replications(cfg.replications, |rep| estimate_replication(design, n, estimators, cfg, rep))?;
    let labels: Vec<String> = estimators.iter().map(RankEstimator::label).collect();
    Ok(histograms_from(design, n, &labels, &estimates))
}
