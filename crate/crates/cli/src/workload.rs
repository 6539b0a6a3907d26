use std::fs;
use std::path::Path;

use resmarg::grem::Workload;
use resmarg::{AttrSet, Domain};

use crate::error::{io_err, json_err, CliError, CliResult};

/// A workload as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkloadSpec {
    /// Every `k`-attribute marginal.
    AllKWay(usize),
    /// Explicit marginals by attribute name, in measurement order.
    Sets(Vec<Vec<String>>),
}

impl WorkloadSpec {
    /// `all-<K>way`, or a path to a JSON list of attribute-name lists.
    pub fn parse(arg: &str) -> CliResult<Self> {
        if let Some(k) = arg.strip_prefix("all-").and_then(|r| r.strip_suffix("way")) {
            let k: usize = k
                .parse()
                .map_err(|_| CliError::Config(format!("bad workload shorthand {arg:?}, expected e.g. all-2way")))?;
            return Ok(WorkloadSpec::AllKWay(k));
        }
        let path = Path::new(arg);
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text).map_err(json_err(path))
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text).map(WorkloadSpec::Sets)
    }

    /// Marginals in the given order, duplicates removed.
    pub fn resolve(&self, domain: &Domain) -> CliResult<Vec<AttrSet>> {
        let sets = match self {
            WorkloadSpec::AllKWay(k) => Workload::all_k_way(domain, *k)?.sets().to_vec(),
            WorkloadSpec::Sets(lists) => {
                let mut out: Vec<AttrSet> = Vec::with_capacity(lists.len());
                for names in lists {
                    if names.is_empty() {
                        return Err(CliError::Config("workload contains an empty marginal".into()));
                    }
                    let set = domain.attr_set(names)?;
                    if set.len() != names.len() {
                        return Err(CliError::Config(format!(
                            "repeated attribute in workload entry {names:?}"
                        )));
                    }
                    if !out.contains(&set) {
                        out.push(set);
                    }
                }
                out
            }
        };
        if sets.is_empty() {
            return Err(CliError::Config("empty workload".into()));
        }
        Ok(sets)
    }
}
