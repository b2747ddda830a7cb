//! Command-line grammar and validated run configurations.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankinfer::sim::{Design, Format, KappaRule, McConfig, MethodSpec, OmegaChoice, RankEstimator};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    CfA,
    CfN,
    CfT,
    Kp,
    KpM,
    EstimateCfA,
    EstimateCfN,
    EstimateKp,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Self::CfA => "cf-a",
            Self::CfN => "cf-n",
            Self::CfT => "cf-t",
            Self::Kp => "kp",
            Self::KpM => "kp-m",
            Self::EstimateCfA => "estimate-cf-a",
            Self::EstimateCfN => "estimate-cf-n",
            Self::EstimateKp => "estimate-kp",
        }
    }

    pub fn is_estimator(self) -> bool {
        matches!(self, Self::EstimateCfA | Self::EstimateCfN | Self::EstimateKp)
    }

    pub fn uses_bootstrap(self) -> bool {
        !matches!(self, Self::Kp | Self::KpM | Self::EstimateKp)
    }

    pub fn uses_kappa(self) -> bool {
        matches!(self, Self::CfA | Self::CfN | Self::EstimateCfA | Self::EstimateCfN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => Format::Json,
            OutputFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rankinfer",
    version,
    about = "Bootstrap and Wald tests for the rank of a matrix estimated from CSV data",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,
    #[command(flatten)]
    test: TestArgs,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Rejection rates of tests on a simulation design.
    Simulate(SimulateArgs),
    /// Distribution of sequential rank estimates on a simulation design.
    Ranks(RanksArgs),
}

#[derive(Debug, Args)]
struct TestArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Columns forming V (m names, comma separated).
    #[arg(long, value_delimiter = ',')]
    v: Vec<String>,
    /// Columns forming Z (k names, comma separated, k <= m).
    #[arg(long, value_delimiter = ',')]
    z: Vec<String>,
    /// Column of cluster labels; switches to the pairs cluster bootstrap.
    #[arg(long)]
    cluster: Option<String>,
    /// Rows are a time series; switches to the circular block bootstrap.
    #[arg(long)]
    time_ordered: bool,
    /// Block length for --time-ordered (default ceil(n^(1/3))).
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long, value_enum, default_value = "cf-t")]
    method: Method,
    /// Hypothesised rank (default k - 1).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// First-step level of cf-t (default alpha/15).
    #[arg(long)]
    beta: Option<f64>,
    /// Tuning: n^(-1/4), 1.5n^(-1/3), or a positive number.
    #[arg(long, default_value = "n^(-1/4)")]
    kappa: String,
    /// Bootstrap draws.
    #[arg(long = "b", default_value_t = 500)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    /// Worker threads (default RANKINFER_THREADS or all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write the document here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DesignKind {
    LinearIid,
    GaussianDirect,
    HeteroMa,
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[arg(long, value_enum)]
    design: DesignKind,
    /// Columns of the linear design.
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Number of null directions of the linear design.
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, value_enum, default_value = "identity")]
    omega: OmegaArg,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "b", default_value_t = 500)]
    draws: usize,
    #[arg(long, default_value_t = 2000)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Block length for time-ordered designs.
    #[arg(long, default_value_t = 2)]
    block_size: usize,
    #[arg(long, default_value = "n^(-1/4)")]
    kappa: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OmegaArg {
    Identity,
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestName {
    CfA,
    CfN,
    CfT,
    Kp,
    KpM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorName {
    CfA,
    CfN,
    Kp,
    Threshold,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cf-a,cf-n,cf-t,kp,kp-m")]
    methods: Vec<TestName>,
    /// cf-t uses beta = alpha / this.
    #[arg(long, default_value_t = 15.0)]
    beta_divisor: f64,
}

#[derive(Debug, Args)]
struct RanksArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cf-a,kp")]
    estimators: Vec<EstimatorName>,
}

/// Validated configuration of a test or estimation run on a file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub v: Vec<String>,
    pub z: Vec<String>,
    pub cluster: Option<String>,
    pub time_ordered: bool,
    pub block_size: Option<usize>,
    pub method: Method,
    pub r: Option<usize>,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub kappa: KappaRule,
    pub draws: usize,
    pub seed: u64,
    pub format: Format,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults for the given input and columns.
    pub fn new(input: impl Into<PathBuf>, v: &[&str], z: &[&str]) -> Self {
        Self {
            input: input.into(),
            v: v.iter().map(|s| s.to_string()).collect(),
            z: z.iter().map(|s| s.to_string()).collect(),
            cluster: None,
            time_ordered: false,
            block_size: None,
            method: Method::CfT,
            r: None,
            alpha: 0.05,
            beta: None,
            kappa: KappaRule::power(0.25),
            draws: 500,
            seed: 0,
            format: Format::Json,
            threads: None,
            output: None,
        }
    }

    /// First-step level of the two-step test.
    pub fn beta_value(&self) -> f64 {
        self.beta.unwrap_or(self.alpha / 15.0)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.v.is_empty() || self.z.is_empty() {
            return Err(CliError::Usage("both --v and --z need at least one column".into()));
        }
        if self.v.len() < self.z.len() {
            return Err(CliError::Usage("varlist1 (--v) should have more variables than varlist2 (--z)".into()));
        }
        if self.cluster.is_some() && self.time_ordered {
            return Err(CliError::Usage("--cluster and --time-ordered select different resampling schemes".into()));
        }
        if self.block_size.is_some() && !self.time_ordered {
            return Err(CliError::Usage("--block-size requires --time-ordered".into()));
        }
        if self.block_size == Some(0) {
            return Err(CliError::Usage("--block-size must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!("--alpha {} must lie in (0, 1)", self.alpha)));
        }
        let beta = self.beta_value();
        if self.method == Method::CfT && !(beta > 0.0 && beta < self.alpha) {
            return Err(CliError::Usage(format!("--beta {beta} must lie in (0, alpha)")));
        }
        if let Some(r) = self.r {
            if self.method.is_estimator() {
                return Err(CliError::Usage("--r does not apply to rank estimators".into()));
            }
            if r >= self.z.len() {
                return Err(CliError::Usage(format!("--r {r} must be below the number of --z columns")));
            }
        }
        if self.draws == 0 {
            return Err(CliError::Usage("--b must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        Ok(())
    }
}

/// Validated configuration of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub design: Design,
    pub n: usize,
    pub mc: McConfig,
    pub format: Format,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Test(RunConfig),
    Simulate { sim: SimConfig, methods: Vec<MethodSpec> },
    Ranks { sim: SimConfig, estimators: Vec<RankEstimator> },
    /// Help or version text, printed with exit code 0.
    Info(String),
}

fn kappa_rule(text: &str) -> CliResult<KappaRule> {
    text.parse().map_err(|e: String| CliError::Usage(e))
}

fn sim_config(a: DesignArgs, r: usize) -> CliResult<(SimConfig, KappaRule)> {
    let design = match a.design {
        DesignKind::LinearIid => Design::LinearIid { k: a.k, d: a.d, delta: a.delta },
        DesignKind::GaussianDirect => Design::GaussianDirect {
            omega: match a.omega {
                OmegaArg::Identity => OmegaChoice::Identity,
                OmegaArg::Correlated => OmegaChoice::Correlated,
            },
            delta: a.delta,
        },
        DesignKind::HeteroMa => Design::HeteroMa { delta: a.delta },
    };
    design.validate()?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha {} must lie in (0, 1)", a.alpha)));
    }
    if a.n < 3 || a.replications == 0 || a.draws == 0 || a.block_size == 0 || a.threads == Some(0) {
        return Err(CliError::Usage("--n must be at least 3; counts and sizes must be positive".into()));
    }
    let (_, k) = design.dims();
    if r >= k {
        return Err(CliError::Usage(format!("--r {r} must be below k = {k}")));
    }
    let mc = McConfig { r, alpha: a.alpha, draws: a.draws, replications: a.replications, seed: a.seed, block_size: a.block_size };
    let sim = SimConfig { design, n: a.n, mc, format: a.format.into(), threads: a.threads, output: a.output };
    Ok((sim, kappa_rule(&a.kappa)?))
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, S>(argv: I) -> CliResult<Command>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            return Ok(Command::Info(e.to_string()))
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    match cli.command {
        Some(Sub::Simulate(s)) => {
            if !(s.beta_divisor > 1.0) {
                return Err(CliError::Usage("--beta-divisor must exceed 1".into()));
            }
            let (sim, kappa) = sim_config(s.design, s.r)?;
            let methods = s
                .methods
                .iter()
                .map(|m| match m {
                    TestName::CfA => MethodSpec::CfA { kappa },
                    TestName::CfN => MethodSpec::CfN { kappa },
                    TestName::CfT => MethodSpec::CfT { beta_divisor: s.beta_divisor },
                    TestName::Kp => MethodSpec::Kp,
                    TestName::KpM => MethodSpec::KpM,
                })
                .collect();
            Ok(Command::Simulate { sim, methods })
        }
        Some(Sub::Ranks(s)) => {
            let (sim, kappa) = sim_config(s.design, 0)?;
            let estimators = s
                .estimators
                .iter()
                .map(|e| match e {
                    EstimatorName::CfA => RankEstimator::CfA { kappa },
                    EstimatorName::CfN => RankEstimator::CfN { kappa },
                    EstimatorName::Kp => RankEstimator::Kp,
                    EstimatorName::Threshold => RankEstimator::Threshold { kappa },
                })
                .collect();
            Ok(Command::Ranks { sim, estimators })
        }
        None => {
            let t = cli.test;
            let input = t.input.ok_or_else(|| CliError::Usage("--input is required".into()))?;
            let cfg = RunConfig {
                input,
                v: t.v,
                z: t.z,
                cluster: t.cluster,
                time_ordered: t.time_ordered,
                block_size: t.block_size,
                method: t.method,
                r: t.r,
                alpha: t.alpha,
                beta: t.beta,
                kappa: kappa_rule(&t.kappa)?,
                draws: t.draws,
                seed: t.seed,
                format: t.format.into(),
                threads: t.threads,
                output: t.output,
            };
            cfg.validate()?;
            Ok(Command::Test(cfg))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> CliResult<Command> {
        parse_args(std::iter::once("rankinfer").chain(s.split_whitespace()))
    }

    #[test]
    fn two_step_with_explicit_beta() {
        let Command::Test(cfg) = parse("--input d.csv --v a,b,c --z x,y --method cf-t --beta 0.00333").unwrap() else {
            panic!("expected a test run")
        };
        assert_eq!(cfg.method, Method::CfT);
        assert_eq!(cfg.v, ["a", "b", "c"]);
        assert_eq!(cfg.beta_value(), 0.00333);
        assert_eq!(cfg.r, None);
        assert_eq!(cfg.draws, 500);
    }

    #[test]
    fn default_beta_is_alpha_over_fifteen() {
        let Command::Test(cfg) = parse("--input d.csv --v a,b --z x,y").unwrap() else { panic!() };
        assert_eq!(cfg.method, Method::CfT);
        assert_eq!(cfg.beta_value(), 0.05 / 15.0);
    }

    #[test]
    fn usage_errors_exit_two() {
        for bad in [
            "--input d.csv --v a,b",
            "--v a --z x",
            "--input d.csv --v a --z x,y",
            "--input d.csv --v a,b --z x,y --bogus",
            "--input d.csv --v a,b --z x,y --alpha 1.5",
            "--input d.csv --v a,b --z x,y --method cf-t --beta 0.05",
            "--input d.csv --v a,b --z x,y --r 2",
            "--input d.csv --v a,b --z x,y --cluster g --time-ordered",
            "--input d.csv --v a,b --z x,y --kappa n^2",
            "simulate --design linear-iid --d 9",
        ] {
            let err = parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }

    #[test]
    fn kp_m_on_square_data_is_valid() {
        let Command::Test(cfg) = parse("--input d.csv --v a,b --z x,y --method kp-m --r 1").unwrap() else { panic!() };
        assert_eq!(cfg.method, Method::KpM);
        assert_eq!(cfg.r, Some(1));
    }

    #[test]
    fn help_is_informational() {
        assert!(matches!(parse("--help").unwrap(), Command::Info(_)));
    }

    #[test]
    fn simulate_builds_methods() {
        let Command::Simulate { sim, methods } =
            parse("simulate --design gaussian-direct --omega correlated --methods kp,cf-t --beta-divisor 10 --replications 7")
                .unwrap()
        else {
            panic!()
        };
        assert_eq!(sim.design, Design::GaussianDirect { omega: OmegaChoice::Correlated, delta: 0.0 });
        assert_eq!(sim.mc.replications, 7);
        assert_eq!(methods, vec![MethodSpec::Kp, MethodSpec::CfT { beta_divisor: 10.0 }]);
    }
}
