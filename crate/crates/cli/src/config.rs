use std::path::PathBuf;

use resmarg::crp::DEFAULT_ETA;
use resmarg::privacy::calibrate_rho;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::workload::WorkloadSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    AimGrem,
    BatchPlanner,
    IidFixed,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::AimGrem => "aim-grem",
            MechanismKind::BatchPlanner => "batch-planner",
            MechanismKind::IidFixed => "iid-fixed",
        }
    }
}

/// Privacy budget, either directly in zCDP or as an `(ε, δ)` target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Privacy {
    Rho(f64),
    Approx { epsilon: f64, delta: f64 },
}

impl Privacy {
    /// Build from the optional flags; exactly one form must be present.
    pub fn from_flags(rho: Option<f64>, epsilon: Option<f64>, delta: Option<f64>) -> CliResult<Self> {
        match (rho, epsilon, delta) {
            (Some(r), None, None) => Ok(Privacy::Rho(r)),
            (None, Some(epsilon), Some(delta)) => Ok(Privacy::Approx { epsilon, delta }),
            (None, Some(_), None) | (None, None, Some(_)) => {
                Err(CliError::Config("--epsilon and --delta must be given together".into()))
            }
            (None, None, None) => Err(CliError::Config("give either --rho or --epsilon with --delta".into())),
            _ => Err(CliError::Config(
                "--rho cannot be combined with --epsilon/--delta".into(),
            )),
        }
    }

    pub fn rho(&self) -> CliResult<f64> {
        let rho = match *self {
            Privacy::Rho(r) => r,
            Privacy::Approx { epsilon, delta } => calibrate_rho(epsilon, delta)?,
        };
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(CliError::Config(format!("rho must be positive and finite, got {rho}")));
        }
        Ok(rho)
    }

    /// Value for the `epsilon_or_rho` metrics column.
    pub fn headline(&self) -> f64 {
        match *self {
            Privacy::Rho(r) => r,
            Privacy::Approx { epsilon, .. } => epsilon,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mechanism: MechanismKind,
    pub privacy: Privacy,
    pub workload: WorkloadSpec,
    pub data: PathBuf,
    pub domain: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    pub eta: f64,
    pub output: PathBuf,
    /// Compare lazy updates against a full rebuild after every round.
    pub audit_full_rebuild: bool,
    /// Zero all wall-clock fields so repeated runs give identical files.
    pub omit_timings: bool,
}

impl RunConfig {
    pub fn new(
        mechanism: MechanismKind,
        privacy: Privacy,
        workload: WorkloadSpec,
        data: PathBuf,
        output: PathBuf,
    ) -> Self {
        RunConfig {
            mechanism,
            privacy,
            workload,
            data,
            domain: None,
            seed: 0,
            trials: 1,
            eta: DEFAULT_ETA,
            output,
            audit_full_rebuild: false,
            omit_timings: false,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.trials == 0 {
            return Err(CliError::Config("--trials must be at least 1".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(CliError::Config(format!("--eta must lie in (0, 1), got {}", self.eta)));
        }
        if let Privacy::Approx { epsilon, delta } = self.privacy {
            if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
                return Err(CliError::Config(format!(
                    "need epsilon > 0 and 0 < delta < 1, got {epsilon}, {delta}"
                )));
            }
        }
        Ok(())
    }
}
