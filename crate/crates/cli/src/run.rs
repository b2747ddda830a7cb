//! Executes a run configuration and renders the result document.

use serde::{Deserialize, Serialize};

use rankinfer::sim::Format;
use rankinfer::{
    cf_analytic_test, cf_numerical_test, cf_two_step_test, cov_cluster, cov_hacc_one_lag, cov_iid, draw_circular_block,
    draw_cluster, draw_empirical, kp_m_test, kp_test, sequential_estimate, singular_values, BootstrapEnsemble, CfEngine,
    Contributions, DerivativeKind, FirstStep, KpEngine, RankEstimate, TestResult, VecCovariance,
};

use crate::args::{Method, RunConfig};
use crate::error::{CliError, CliResult};
use crate::table::{read_dataset, Dataset};

/// One step of a sequential rank estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub r: usize,
    pub statistic: f64,
    pub critical_value: Option<f64>,
    pub reject: bool,
}

/// Output of one invocation. Tests fill `r`, `statistic` and `reject`;
/// estimators fill `estimated_rank` and `steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub method: String,
    pub r: Option<usize>,
    pub statistic: Option<f64>,
    pub critical_value: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: Option<bool>,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub estimated_rank: Option<usize>,
    #[serde(rename = "B")]
    pub draws: Option<usize>,
    pub seed: u64,
    pub scheme: String,
    pub n: usize,
    pub clusters: Option<usize>,
    pub block_size: Option<usize>,
    pub singular_values: Vec<f64>,
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<StepRecord>>,
}

pub const CSV_HEADER: [&str; 18] = [
    "method",
    "r",
    "statistic",
    "critical_value",
    "p_value",
    "reject",
    "alpha",
    "beta",
    "kappa",
    "estimated_rank",
    "B",
    "seed",
    "scheme",
    "n",
    "clusters",
    "block_size",
    "singular_values",
    "flags",
];

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or_else(String::new, T::to_string)
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

impl ResultDocument {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("document serialises");
        out.push(b'\n');
        out
    }

    /// Header plus one row; list fields are `;`-separated.
    pub fn to_csv(&self) -> Vec<u8> {
        let row = [
            self.method.clone(),
            opt(&self.r),
            opt(&self.statistic),
            opt(&self.critical_value),
            opt(&self.p_value),
            opt(&self.reject),
            self.alpha.to_string(),
            opt(&self.beta),
            opt(&self.kappa),
            opt(&self.estimated_rank),
            opt(&self.draws),
            self.seed.to_string(),
            self.scheme.clone(),
            self.n.to_string(),
            opt(&self.clusters),
            opt(&self.block_size),
            join(&self.singular_values),
            join(&self.flags),
        ];
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        w.write_record(&row).expect("in-memory write");
        w.into_inner().expect("in-memory write")
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

enum Resampling {
    Iid,
    Cluster(Vec<usize>),
    Block(usize),
}

impl Resampling {
    fn label(&self) -> &'static str {
        match self {
            Self::Iid => "iid",
            Self::Cluster(_) => "cluster",
            Self::Block(_) => "circular-block",
        }
    }

    fn covariance(&self, c: &Contributions<f64>) -> rankinfer::Result<VecCovariance<f64>> {
        match self {
            Self::Iid => cov_iid(c),
            Self::Cluster(ids) => cov_cluster(c, ids),
            Self::Block(_) => cov_hacc_one_lag(c),
        }
    }

    fn ensemble(&self, c: &Contributions<f64>, draws: usize, seed: u64) -> rankinfer::Result<BootstrapEnsemble<f64>> {
        match self {
            Self::Iid => draw_empirical(c, draws, seed),
            Self::Cluster(ids) => draw_cluster(c, ids, draws, seed),
            Self::Block(b) => draw_circular_block(c, *b, draws, seed),
        }
    }
}

fn from_test(doc: &mut ResultDocument, res: TestResult<f64>) {
    doc.r = Some(res.r);
    doc.statistic = Some(res.statistic);
    doc.critical_value = res.critical_value;
    doc.p_value = res.p_value;
    doc.reject = Some(res.reject);
    doc.beta = res.beta;
    doc.estimated_rank = res.estimated_rank;
    doc.flags.extend(res.flags);
}

fn from_estimate(doc: &mut ResultDocument, est: RankEstimate<f64>) {
    let steps: Vec<StepRecord> = est
        .trail
        .iter()
        .map(|s| StepRecord { r: s.r, statistic: s.statistic, critical_value: s.critical_value, reject: s.reject })
        .collect();
    if let Some(last) = steps.last() {
        doc.statistic = Some(last.statistic);
        doc.critical_value = last.critical_value;
    }
    doc.estimated_rank = Some(est.rank);
    doc.flags.extend(est.flags);
    doc.steps = Some(steps);
}

/// Runs `cfg` on data already in memory.
pub fn run_on(cfg: &RunConfig, data: &Dataset) -> CliResult<ResultDocument> {
    cfg.validate()?;
    let n = data.len();
    if n < 2 {
        return Err(CliError::Data(format!("need at least 2 rows, got {n}")));
    }
    let contribs = Contributions::from_pairs(&data.v, &data.z)?;
    let est = contribs.estimate()?;
    let k = est.cols();
    let resampling = match (&data.clusters, cfg.time_ordered) {
        (Some(ids), _) => Resampling::Cluster(ids.clone()),
        (None, true) => Resampling::Block(cfg.block_size.unwrap_or_else(|| (n as f64).cbrt().ceil() as usize)),
        (None, false) => Resampling::Iid,
    };
    let kappa = cfg.kappa.value(n);
    let mut doc = ResultDocument {
        method: cfg.method.label().to_string(),
        r: None,
        statistic: None,
        critical_value: None,
        p_value: None,
        reject: None,
        alpha: cfg.alpha,
        beta: None,
        kappa: cfg.method.uses_kappa().then_some(kappa),
        estimated_rank: None,
        draws: cfg.method.uses_bootstrap().then_some(cfg.draws),
        seed: cfg.seed,
        scheme: resampling.label().to_string(),
        n,
        clusters: data.clusters.as_ref().map(|ids| ids.iter().max().map_or(0, |m| m + 1)),
        block_size: match resampling {
            Resampling::Block(b) => Some(b),
            _ => None,
        },
        singular_values: singular_values(&est.values)?.iter().copied().collect(),
        flags: Vec::new(),
        steps: None,
    };
    let r = cfg.r.unwrap_or(k - 1);
    let ensemble = if cfg.method.uses_bootstrap() {
        Some(resampling.ensemble(&contribs, cfg.draws, cfg.seed)?)
    } else {
        None
    };
    let needs_cov = matches!(cfg.method, Method::Kp | Method::KpM | Method::CfT | Method::EstimateKp);
    let cov = if needs_cov { Some(resampling.covariance(&contribs)?) } else { None };
    let ens = || ensemble.as_ref().expect("bootstrap methods draw an ensemble");
    let cov = || cov.as_ref().expect("wald methods estimate a covariance");
    match cfg.method {
        Method::CfA => from_test(&mut doc, cf_analytic_test(&est, ens(), r, cfg.alpha, kappa)?),
        Method::CfN => from_test(&mut doc, cf_numerical_test(&est, ens(), r, cfg.alpha, kappa)?),
        Method::CfT => {
            let res = cf_two_step_test(&est, ens(), r, cfg.alpha, cfg.beta_value(), FirstStep::SequentialKp(cov()))?;
            from_test(&mut doc, res)
        }
        Method::Kp => from_test(&mut doc, kp_test(&est, cov(), r, cfg.alpha)?),
        Method::KpM => from_test(&mut doc, kp_m_test(&est, cov(), r, cfg.alpha)?),
        Method::EstimateCfA => {
            let engine = CfEngine::new(&est, ens(), DerivativeKind::Analytic { kappa })?;
            from_estimate(&mut doc, sequential_estimate(&engine, cfg.alpha)?)
        }
        Method::EstimateCfN => {
            let engine = CfEngine::new(&est, ens(), DerivativeKind::Numerical { kappa })?;
            from_estimate(&mut doc, sequential_estimate(&engine, cfg.alpha)?)
        }
        Method::EstimateKp => {
            let engine = KpEngine::new(&est, cov())?;
            let mut estimate = sequential_estimate(&engine, cfg.alpha)?;
            estimate.flags.extend(cov().flags.iter().cloned());
            from_estimate(&mut doc, estimate)
        }
    }
    let mut seen = std::collections::HashSet::new();
    doc.flags.retain(|f| seen.insert(f.clone()));
    Ok(doc)
}

/// Reads the input file and runs `cfg` on it, on the configured thread pool.
pub fn run(cfg: &RunConfig) -> CliResult<ResultDocument> {
    cfg.validate()?;
    let data = read_dataset(&cfg.input, &cfg.v, &cfg.z, cfg.cluster.as_deref())?;
    rankinfer::sim::with_threads(cfg.threads, || run_on(cfg, &data))
}
