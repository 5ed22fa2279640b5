use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bosonic::{DEFAULT_GUARD, DEFAULT_N_MAX, TRUNC_TOL};
use crate::error::{Error, Result};
use crate::recovery::QuadratureSpec;
use crate::theorems::OptimizerBudget;

/// Largest joint Hilbert dimension a trial may form unless overridden.
pub const DEFAULT_MAX_TOTAL_DIM: usize = 64;
pub const DEFAULT_SEED: u64 = 20160114;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    EntropyGain,
    Recovery,
    InfoGain,
    InfoGainQsi,
    Disturbance,
    Cpdp,
    Bosonic,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::EntropyGain,
        Suite::Recovery,
        Suite::InfoGain,
        Suite::InfoGainQsi,
        Suite::Disturbance,
        Suite::Cpdp,
        Suite::Bosonic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::EntropyGain => "entropy-gain",
            Suite::Recovery => "recovery",
            Suite::InfoGain => "info-gain",
            Suite::InfoGainQsi => "info-gain-qsi",
            Suite::Disturbance => "disturbance",
            Suite::Cpdp => "cpdp",
            Suite::Bosonic => "bosonic",
        }
    }

    pub fn default_trials(self) -> u64 {
        match self {
            Suite::EntropyGain => 200,
            Suite::Recovery | Suite::InfoGain | Suite::Disturbance => 100,
            Suite::InfoGainQsi | Suite::Cpdp => 50,
            // one trial per grid point, the count is not configurable
            Suite::Bosonic => crate::bosonic::default_grid().len() as u64,
        }
    }

    /// Pool of local dimensions trials draw from.
    pub fn default_dims(self) -> Vec<usize> {
        match self {
            Suite::EntropyGain => vec![2, 3, 4],
            Suite::Recovery | Suite::InfoGain | Suite::Disturbance => vec![2, 3],
            Suite::InfoGainQsi | Suite::Cpdp => vec![2],
            Suite::Bosonic => vec![],
        }
    }

    /// Number of local factors in the largest joint system a trial builds.
    fn factors(self) -> u32 {
        match self {
            Suite::EntropyGain | Suite::InfoGain | Suite::Disturbance => 2,
            Suite::Recovery | Suite::InfoGainQsi | Suite::Cpdp => 3,
            Suite::Bosonic => 0,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::InvalidConfig(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BosonicConfig {
    pub n_max: usize,
    /// Fixed guard band; `None` picks the smallest guard `>= min_guard` at
    /// which the almost-unital identity passes for each grid point.
    pub guard: Option<usize>,
    pub min_guard: usize,
    pub trunc_tol: f64,
}

impl Default for BosonicConfig {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            guard: None,
            min_guard: DEFAULT_GUARD,
            trunc_tol: TRUNC_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub suites: Vec<Suite>,
    pub master_seed: u64,
    /// Trials per suite; `None` uses each suite's default.
    pub trials: Option<u64>,
    /// Local dimension pool; `None` uses each suite's default.
    pub dims: Option<Vec<usize>>,
    /// Replaces every check's own tolerance when set.
    pub tol: Option<f64>,
    pub quadrature: QuadratureSpec,
    pub max_total_dim: usize,
    /// Entropy-gain trials that also run the minimal-gain optimizer.
    pub min_gain_trials: u64,
    pub optimizer: OptimizerBudget,
    pub bosonic: BosonicConfig,
    /// Run a single trial (and skip the fixed instances).
    pub only_trial: Option<u64>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub format: Format,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            master_seed: DEFAULT_SEED,
            trials: None,
            dims: None,
            tol: None,
            quadrature: QuadratureSpec::default(),
            max_total_dim: DEFAULT_MAX_TOTAL_DIM,
            min_gain_trials: 20,
            optimizer: OptimizerBudget::default(),
            bosonic: BosonicConfig::default(),
            only_trial: None,
            out: None,
            format: Format::Json,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl CampaignConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| invalid(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn trials_for(&self, suite: Suite) -> u64 {
        if suite == Suite::Bosonic {
            return suite.default_trials();
        }
        self.trials.unwrap_or_else(|| suite.default_trials())
    }

    pub fn dims_for(&self, suite: Suite) -> Vec<usize> {
        self.dims.clone().unwrap_or_else(|| suite.default_dims())
    }

    pub fn validate(&self) -> Result<()> {
        if self.suites.is_empty() {
            return Err(invalid("no suite selected"));
        }
        if self.trials == Some(0) {
            return Err(invalid("trials must be at least 1"));
        }
        if let Some(tol) = self.tol {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(invalid(format!("tol must be a non-negative number, got {tol}")));
            }
        }
        if let Some(dims) = &self.dims {
            if dims.is_empty() {
                return Err(invalid("dims must list at least one dimension"));
            }
            if let Some(d) = dims.iter().find(|&&d| d < 2) {
                return Err(invalid(format!("dimension {d} is below 2")));
            }
        }
        for &suite in &self.suites {
            let k = suite.factors();
            if k == 0 {
                continue;
            }
            let largest = self.dims_for(suite).into_iter().max().unwrap_or(2);
            let total = largest.checked_pow(k).unwrap_or(usize::MAX);
            if total > self.max_total_dim {
                return Err(invalid(format!(
                    "suite {suite} with local dimension {largest} forms a {total}-dimensional system, above the limit {}",
                    self.max_total_dim
                )));
            }
            if let Some(t) = self.only_trial {
                if t >= self.trials_for(suite) {
                    return Err(invalid(format!("trial {t} is outside suite {suite}")));
                }
            }
        }
        self.quadrature
            .validate()
            .map_err(|e| invalid(format!("quadrature: {e}")))?;
        if self.optimizer.restarts == 0 || self.optimizer.evaluations == 0 {
            return Err(invalid("optimizer budget must be positive"));
        }
        let b = &self.bosonic;
        if b.n_max < 1 {
            return Err(invalid("bosonic n_max must be at least 1"));
        }
        if b.guard.unwrap_or(b.min_guard) >= b.n_max {
            return Err(invalid("bosonic guard must be below n_max"));
        }
        if !(b.trunc_tol.is_finite() && b.trunc_tol > 0.0) {
            return Err(invalid("bosonic trunc_tol must be positive"));
        }
        Ok(())
    }
}
