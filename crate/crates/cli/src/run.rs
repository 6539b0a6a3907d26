use std::fs;
use std::path::Path;

use log::info;
use resmarg::grem::{UpdateMode, Workload};
use resmarg::mechanisms::{
    run_aim_grem, run_batch_planner, run_fixed_sequence, AimConfig, BatchConfig, FixedConfig, MechanismOutput,
    RunReport, Timings,
};
use resmarg::{DataTable, DpRng};
use serde::{Deserialize, Serialize};

use crate::config::{MechanismKind, Privacy, RunConfig};
use crate::error::{io_err, CliError, CliResult};
use crate::ingest::{domain_to_file, ingest_csv, DomainFile, IngestReport};

pub const REPORT_FILE: &str = "report.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const DOMAIN_FILE: &str = "domain.json";
pub const VALUES_FILE: &str = "values.json";

/// One workload marginal estimate, flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub attributes: Vec<String>,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutput {
    pub seed: u64,
    pub report: RunReport,
    pub estimates: Vec<EstimateRecord>,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputReport {
    pub mechanism: MechanismKind,
    pub privacy: Privacy,
    /// zCDP budget each trial ran with.
    pub rho: f64,
    pub eta: f64,
    pub records: usize,
    pub domain: DomainFile,
    pub workload: Vec<Vec<String>>,
    pub trials: Vec<TrialOutput>,
}

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub mechanism: String,
    pub seed: u64,
    pub epsilon_or_rho: f64,
    pub metric: String,
    pub value: f64,
    pub wall_seconds: f64,
}

/// Load the data named by `config`, run every trial and write the outputs.
pub fn run(config: &RunConfig) -> CliResult<OutputReport> {
    config.validate()?;
    let ingest = ingest_csv(&config.data, config.domain.as_deref())?;
    info!(
        "loaded {} records over {} attributes",
        ingest.table.len(),
        ingest.table.domain().len()
    );
    let report = execute(config, &ingest.table)?;
    write_outputs(&config.output, &report, &ingest)?;
    Ok(report)
}

/// Run every trial on an already loaded table.
pub fn execute(config: &RunConfig, table: &DataTable) -> CliResult<OutputReport> {
    config.validate()?;
    let domain = table.domain();
    let rho = config.privacy.rho()?;
    let sequence = config.workload.resolve(domain)?;
    let workload = Workload::new(sequence.iter().cloned())?;
    let mut trials = Vec::with_capacity(config.trials);
    for k in 0..config.trials {
        let seed = config.seed.wrapping_add(k as u64);
        let mut rng = DpRng::seed_from_u64(seed);
        info!("trial {} of {} (seed {seed})", k + 1, config.trials);
        let out: MechanismOutput = match config.mechanism {
            MechanismKind::AimGrem => {
                let c = AimConfig {
                    eta: config.eta,
                    audit: config.audit_full_rebuild,
                    ..AimConfig::default()
                };
                run_aim_grem(table, &workload, rho, &mut rng, &c)?
            }
            MechanismKind::BatchPlanner => {
                run_batch_planner(table, &workload, rho, &mut rng, &BatchConfig { eta: config.eta })?
            }
            MechanismKind::IidFixed => {
                let c = FixedConfig {
                    update_mode: UpdateMode::Lazy,
                    eta: config.eta,
                    audit: config.audit_full_rebuild,
                    ..FixedConfig::default()
                };
                run_fixed_sequence(table, &sequence, rho, &mut rng, &c)?
            }
        };
        let mut report = out.report;
        if config.omit_timings {
            report.timings = Timings::default();
        }
        let estimates = out
            .estimates
            .iter()
            .map(|(g, m)| EstimateRecord {
                attributes: domain.names(g),
                shape: m.values().shape().to_vec(),
                values: m.values().data().to_vec(),
            })
            .collect();
        trials.push(TrialOutput {
            seed,
            report,
            estimates,
        });
    }
    Ok(OutputReport {
        mechanism: config.mechanism,
        privacy: config.privacy,
        rho,
        eta: config.eta,
        records: table.len(),
        domain: domain_to_file(domain),
        workload: sequence.iter().map(|g| domain.names(g)).collect(),
        trials,
    })
}

/// Four rows per trial: `meanL1`, `meanL1_normalized`, `meanL2`, `maxL1`.
pub fn metric_rows(report: &OutputReport) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for t in &report.trials {
        let Some(m) = t.report.metrics else { continue };
        for (name, value) in [
            ("meanL1", m.mean_l1),
            ("meanL1_normalized", m.mean_l1_normalized),
            ("meanL2", m.mean_l2),
            ("maxL1", m.max_l1),
        ] {
            rows.push(MetricRow {
                mechanism: report.mechanism.name().to_string(),
                seed: t.seed,
                epsilon_or_rho: report.privacy.headline(),
                metric: name.to_string(),
                value,
                wall_seconds: t.report.timings.total,
            });
        }
    }
    rows
}

pub fn write_outputs(dir: &Path, report: &OutputReport, ingest: &IngestReport) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join(REPORT_FILE), report)?;
    write_json(&dir.join(DOMAIN_FILE), &report.domain)?;
    write_json(&dir.join(VALUES_FILE), &ingest.values)?;
    write_metrics(&dir.join(METRICS_FILE), &metric_rows(report))?;
    info!("wrote outputs to {}", dir.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> CliResult<()> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_report(path: &Path) -> CliResult<OutputReport> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(crate::error::json_err(path))
}

pub fn read_metrics(path: &Path) -> CliResult<Vec<MetricRow>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}
