//! Command-line front end: CSV ingestion, workload and privacy parsing,
//! mechanism runs and the transform benchmark.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod config;
pub mod error;
pub mod ingest;
pub mod run;
pub mod workload;

pub use benchmark::{benchmark, BenchRow, BenchmarkConfig};
pub use config::{MechanismKind, Privacy, RunConfig};
pub use error::{CliError, CliResult};
pub use ingest::{ingest_csv, IngestReport};
pub use run::{execute, run, MetricRow, OutputReport};
pub use workload::WorkloadSpec;
