use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use log::{info, warn};
use resmarg::{DataTable, Domain};

use crate::error::{io_err, json_err, CliError, CliResult};

/// Domain file: attribute name to cardinality, in column order.
pub type DomainFile = IndexMap<String, usize>;

/// A loaded table plus what was dropped on the way in.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub table: DataTable,
    /// Original category labels per attribute, indexed by code.
    pub values: IndexMap<String, Vec<String>>,
    pub dropped_rows: usize,
    pub dropped_columns: Vec<String>,
}

pub fn read_domain_file(path: &Path) -> CliResult<DomainFile> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

pub fn domain_to_file(domain: &Domain) -> DomainFile {
    domain
        .attrs()
        .iter()
        .cloned()
        .zip(domain.sizes().iter().copied())
        .collect()
}

/// Load a CSV with a header row.
///
/// With a domain file, cells must be integer codes `0..n_i` for the declared
/// attributes; other columns are ignored. Without one, each column's distinct
/// values are coded in order of first appearance. Rows with an empty cell are
/// dropped, and so are inferred columns with fewer than two distinct values.
pub fn ingest_csv(path: &Path, domain_path: Option<&Path>) -> CliResult<IngestReport> {
    let csv_err = |source| CliError::Csv {
        path: PathBuf::from(path),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut dropped_rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let cells: Vec<String> = rec.iter().map(|c| c.trim().to_string()).collect();
        if cells.len() != header.len() || cells.iter().any(String::is_empty) {
            dropped_rows += 1;
            continue;
        }
        rows.push(cells);
    }
    if dropped_rows > 0 {
        warn!("dropped {dropped_rows} rows with missing values");
    }

    match domain_path {
        Some(dp) => ingest_with_domain(path, &header, rows, read_domain_file(dp)?, dropped_rows),
        None => ingest_inferred(&header, rows, dropped_rows),
    }
}

fn ingest_with_domain(
    path: &Path,
    header: &[String],
    rows: Vec<Vec<String>>,
    declared: DomainFile,
    dropped_rows: usize,
) -> CliResult<IngestReport> {
    let mut columns = Vec::with_capacity(declared.len());
    for name in declared.keys() {
        let col = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("{}: no column for attribute {name}", path.display())))?;
        columns.push(col);
    }
    for h in header {
        if !declared.contains_key(h) {
            info!("ignoring column {h}: not in domain");
        }
    }
    let domain = Domain::new(declared.keys().cloned().collect(), declared.values().copied().collect())?;
    let mut records = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let mut rec = Vec::with_capacity(columns.len());
        for (i, &c) in columns.iter().enumerate() {
            let n = domain.size(i);
            let code: usize = row[c].parse().ok().filter(|&v| v < n).ok_or_else(|| {
                CliError::Input(format!(
                    "{}: data row {}: value {:?} of {} is not a code in 0..{n}",
                    path.display(),
                    r + 1,
                    row[c],
                    domain.name(i)
                ))
            })?;
            rec.push(code);
        }
        records.push(rec);
    }
    let values = declared
        .iter()
        .map(|(name, &n)| (name.clone(), (0..n).map(|v| v.to_string()).collect()))
        .collect();
    Ok(IngestReport {
        table: DataTable::new(domain, records)?,
        values,
        dropped_rows,
        dropped_columns: Vec::new(),
    })
}

fn ingest_inferred(header: &[String], rows: Vec<Vec<String>>, dropped_rows: usize) -> CliResult<IngestReport> {
    let mut dicts: Vec<IndexMap<String, usize>> = vec![IndexMap::new(); header.len()];
    for row in &rows {
        for (dict, cell) in dicts.iter_mut().zip(row) {
            let next = dict.len();
            dict.entry(cell.clone()).or_insert(next);
        }
    }
    let mut kept = Vec::new();
    let mut dropped_columns = Vec::new();
    for (c, name) in header.iter().enumerate() {
        if dicts[c].len() < 2 {
            info!("dropping column {name}: {} distinct value(s)", dicts[c].len());
            dropped_columns.push(name.clone());
        } else {
            kept.push(c);
        }
    }
    if kept.is_empty() {
        return Err(CliError::Input("no column has two or more distinct values".into()));
    }
    let domain = Domain::new(
        kept.iter().map(|&c| header[c].clone()).collect(),
        kept.iter().map(|&c| dicts[c].len()).collect(),
    )?;
    let records = rows
        .iter()
        .map(|row| kept.iter().map(|&c| dicts[c][&row[c]]).collect())
        .collect();
    let values = kept
        .iter()
        .map(|&c| (header[c].clone(), dicts[c].keys().cloned().collect()))
        .collect();
    Ok(IngestReport {
        table: DataTable::new(domain, records)?,
        values,
        dropped_rows,
        dropped_columns,
    })
}
