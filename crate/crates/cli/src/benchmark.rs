use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use resmarg::kron::{kron_matvec, query_factors, DenseMatrix, QueryKind};
use resmarg::tensor::{decomp, recon};
use resmarg::{AttrSet, Domain, DpRng, Marginal, NdArray};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Outputs of the two methods must agree to this relative error before
/// anything is timed.
pub const AGREEMENT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    /// Largest marginal (in cells) to time; bigger grid points are skipped.
    pub max_cells: usize,
    /// Each timing is the best of this many runs.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            max_cells: 1 << 22,
            repeats: 3,
            seed: 0,
        }
    }
}

/// One line of the timing CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub setting: u32,
    pub degree: usize,
    pub attr_size: usize,
    pub cells: usize,
    /// `decomp` or `recon`, each over every residual of the marginal.
    pub op: String,
    /// `in-axis` or `kronecker`.
    pub method: String,
    pub seconds: f64,
}

/// Setting 1 fixes `n_i = 16` and grows `|γ|` from 2 to 7; setting 2 fixes
/// `|γ| = 3` and grows `n_i` from 2 to 256.
pub fn grid() -> Vec<(u32, usize, usize)> {
    let mut g: Vec<(u32, usize, usize)> = (2..=7).map(|k| (1, k, 16)).collect();
    g.extend([2, 4, 8, 16, 32, 64, 128, 256].into_iter().map(|n| (2, 3, n)));
    g
}

pub fn benchmark(config: &BenchmarkConfig) -> CliResult<Vec<BenchRow>> {
    if config.repeats == 0 {
        return Err(CliError::Config("benchmark repeats must be at least 1".into()));
    }
    let mut rng = DpRng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    for (setting, degree, n) in grid() {
        let cells = n.checked_pow(degree as u32).unwrap_or(usize::MAX);
        if cells > config.max_cells {
            warn!(
                "skipping |γ|={degree}, n={n}: {cells} cells exceeds the cap of {}",
                config.max_cells
            );
            continue;
        }
        info!("timing |γ|={degree}, n={n}");
        for (op, (in_axis, kron)) in ["decomp", "recon"]
            .into_iter()
            .zip(time_point(degree, n, config, &mut rng)?)
        {
            for (method, seconds) in [("in-axis", in_axis), ("kronecker", kron)] {
                rows.push(BenchRow {
                    setting,
                    degree,
                    attr_size: n,
                    cells,
                    op: op.into(),
                    method: method.into(),
                    seconds,
                });
            }
        }
    }
    Ok(rows)
}

/// `[(in-axis, kronecker)]` seconds for decomp, then recon.
fn time_point(degree: usize, n: usize, config: &BenchmarkConfig, rng: &mut DpRng) -> CliResult<[(f64, f64); 2]> {
    let domain = Domain::from_sizes(vec![n; degree])?;
    let gamma = AttrSet::new((0..degree).collect());
    let cells = n.pow(degree as u32);
    let values = NdArray::new(vec![n; degree], (0..cells).map(|_| rng.uniform() * 100.0).collect())?;
    let mu = Marginal::new(&domain, gamma.clone(), values)?;
    let taus = gamma.subsets()?;
    let kind_d = |t: &AttrSet| QueryKind::Decomp {
        tau: t.clone(),
        gamma: gamma.clone(),
    };
    let kind_r = |t: &AttrSet| QueryKind::Recon {
        tau: t.clone(),
        gamma: gamma.clone(),
    };
    let dec: Vec<Vec<DenseMatrix>> = taus
        .iter()
        .map(|t| query_factors(&domain, &kind_d(t)))
        .collect::<Result<_, _>>()?;
    let rec: Vec<Vec<DenseMatrix>> = taus
        .iter()
        .map(|t| query_factors(&domain, &kind_r(t)))
        .collect::<Result<_, _>>()?;
    let residuals = taus.iter().map(|t| decomp(&mu, t)).collect::<Result<Vec<_>, _>>()?;

    for (i, t) in taus.iter().enumerate() {
        agree(
            residuals[i].values().data(),
            &kron_matvec(&dec[i], mu.values().data())?,
            "decomp",
            t,
        )?;
        let back = recon(&residuals[i], &gamma, &domain)?;
        agree(
            back.values().data(),
            &kron_matvec(&rec[i], residuals[i].values().data())?,
            "recon",
            t,
        )?;
    }

    let best = |f: &mut dyn FnMut() -> CliResult<()>| -> CliResult<f64> {
        let mut best = f64::INFINITY;
        for _ in 0..config.repeats {
            let t0 = Instant::now();
            f()?;
            best = best.min(t0.elapsed().as_secs_f64());
        }
        Ok(best)
    };
    let decomp_axis = best(&mut || {
        for t in &taus {
            std::hint::black_box(decomp(&mu, t)?);
        }
        Ok(())
    })?;
    let decomp_kron = best(&mut || {
        for f in &dec {
            std::hint::black_box(kron_matvec(f, mu.values().data())?);
        }
        Ok(())
    })?;
    let recon_axis = best(&mut || {
        for r in &residuals {
            std::hint::black_box(recon(r, &gamma, &domain)?);
        }
        Ok(())
    })?;
    let recon_kron = best(&mut || {
        for (f, r) in rec.iter().zip(&residuals) {
            std::hint::black_box(kron_matvec(f, r.values().data())?);
        }
        Ok(())
    })?;
    Ok([(decomp_axis, decomp_kron), (recon_axis, recon_kron)])
}

fn agree(a: &[f64], b: &[f64], op: &str, tau: &AttrSet) -> CliResult<()> {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let err = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale;
    if a.len() != b.len() || err > AGREEMENT_TOLERANCE {
        return Err(CliError::Input(format!(
            "{op} for {tau}: in-axis and Kronecker outputs differ by {err:.2e}"
        )));
    }
    Ok(())
}

pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> CliResult<()> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(crate::error::io_err(path))
}
