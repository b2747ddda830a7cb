use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    /// Bootstrap with the plug-in (rank-thresholded) derivative estimate.
    CfA,
    /// Bootstrap with the finite-difference derivative estimate.
    CfN,
    /// Pre-test the rank, then bootstrap with the pre-test rank.
    CfT,
    /// Wald-type test with chi-square critical value.
    Kp,
    /// Wald-type tests at every rank up to r, all required to reject.
    KpM,
}

impl TestMethod {
    pub fn label(self) -> &'static str {
        match self {
            Self::CfA => "cf-a",
            Self::CfN => "cf-n",
            Self::CfT => "cf-t",
            Self::Kp => "kp",
            Self::KpM => "kp-m",
        }
    }
}

impl std::fmt::Display for TestMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for TestMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cf-a" => Ok(Self::CfA),
            "cf-n" => Ok(Self::CfN),
            "cf-t" => Ok(Self::CfT),
            "kp" => Ok(Self::Kp),
            "kp-m" => Ok(Self::KpM),
            other => Err(format!("unknown test method '{other}'")),
        }
    }
}

/// Outcome of testing `H0: rank <= r`.
///
/// `critical_value` and `p_value` are absent when a two-step test rejects
/// in its first step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult<T: Real> {
    pub method: TestMethod,
    pub r: usize,
    pub statistic: T,
    pub critical_value: Option<T>,
    pub p_value: Option<T>,
    pub reject: bool,
    pub alpha: T,
    pub beta: Option<T>,
    pub kappa: Option<T>,
    pub estimated_rank: Option<usize>,
    pub flags: Vec<String>,
}
