//! End-to-end experiment bundles: data, fits, post-processing, summaries and
//! diagnostics for every configured strategy.
//!
//! Layout of one cell:
//!
//! ```text
//! <bundle>/config.json
//! <bundle>/truth.csv            (synthetic data only)
//! <bundle>/data.csv
//! <bundle>/<strategy>/samples.csv, samples_meta.json, [labels.csv, atoms.csv]
//! <bundle>/<strategy>/density.csv, percentiles.csv, report.json
//! <bundle>/summary.json, efficiency.csv
//! ```
//!
//! With a factorial design each `(N, I)` cell gets its own `n<N>_i<I>`
//! directory with that layout.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::archive::SampleArchive;
use crate::config::{DataSource, ExperimentConfig};
use crate::diagnostics::{efficiency_report, EfficiencyReport, ParameterSelection};
use crate::error::{Error, Result};
use crate::identify::postprocess_archive;
use crate::inference::density::{default_grid, density_from_archive, linspace, posterior_mean_abilities, DensityEstimate};
use crate::inference::metrics::{error_metrics, RecoveryTable};
use crate::inference::percentiles::{percentiles_from_archive, PercentileSummary};
use crate::inference::waic::{waic_from_archive, Waic};
use crate::model::ResponseMatrix;
use crate::samplers::{run_chain, StrategyConfig};
use crate::sim::{simulate_responses, GroundTruth};

pub const CONFIG_FILE: &str = "config.json";
pub const TRUTH_FILE: &str = "truth.csv";
pub const DATA_FILE: &str = "data.csv";
pub const DENSITY_FILE: &str = "density.csv";
pub const PERCENTILES_FILE: &str = "percentiles.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const EFFICIENCY_FILE: &str = "efficiency.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: String,
    pub config: StrategyConfig,
    pub n_individuals: usize,
    pub n_items: usize,
    pub n_draws: usize,
    pub waic: Waic,
    pub efficiency: EfficiencyReport,
    pub recovery: Option<RecoveryTable>,
    /// Number of strict local maxima of the posterior mean density.
    pub density_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub directory: PathBuf,
    pub n_individuals: usize,
    pub n_items: usize,
    pub strategies: Vec<StrategyReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSummary {
    pub seed: u64,
    pub cells: Vec<CellSummary>,
}

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(io(path, File::create(path))?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    io(path, std::io::Write::flush(&mut w))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = io(path, File::open(path))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

pub fn read_responses(path: &Path) -> Result<ResponseMatrix> {
    ResponseMatrix::read_csv(BufReader::new(io(path, File::open(path))?))
}

/// Grid for density output: the configured range, or one padded around the
/// posterior-mean abilities.
fn density_grid(cfg: &ExperimentConfig, archive: &SampleArchive) -> Result<Vec<f64>> {
    let a = &cfg.analysis;
    match (a.grid_min, a.grid_max) {
        (Some(lo), Some(hi)) => Ok(linspace(lo, hi, a.grid_points)),
        _ => default_grid(&posterior_mean_abilities(archive)?, a.grid_points),
    }
}

pub fn write_density(path: &Path, est: &DensityEstimate, truth: Option<&GroundTruth>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["grid", "mean", "lower", "upper"];
    if truth.is_some() {
        header.push("truth");
    }
    w.write_record(&header)?;
    for k in 0..est.grid.len() {
        let mut rec = vec![
            format!("{}", est.grid[k]),
            format!("{}", est.mean[k]),
            format!("{}", est.lower[k]),
            format!("{}", est.upper[k]),
        ];
        if let Some(t) = truth {
            rec.push(format!("{}", t.density(est.grid[k])));
        }
        w.write_record(&rec)?;
    }
    io(path, w.flush())
}

pub fn write_percentiles(path: &Path, rows: &[PercentileSummary], truth: Option<&GroundTruth>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["individual", "mean", "lower", "upper"];
    if truth.is_some() {
        header.push("truth");
    }
    w.write_record(&header)?;
    let true_p = truth.map(|t| t.percentiles());
    for (k, r) in rows.iter().enumerate() {
        let mut rec = vec![
            r.individual.to_string(),
            format!("{}", r.mean),
            format!("{}", r.lower),
            format!("{}", r.upper),
        ];
        if let Some(p) = &true_p {
            rec.push(format!("{}", p[k]));
        }
        w.write_record(&rec)?;
    }
    io(path, w.flush())
}

/// Posterior-mean recovery errors on the base scale.
pub fn recovery(archive: &SampleArchive, truth: &GroundTruth) -> Result<RecoveryTable> {
    let base = if archive.meta.parameterization == crate::archive::ParameterizationState::Base {
        archive.clone()
    } else {
        postprocess_archive(archive)?
    };
    let m = base.meta.n_items;
    let means = base.column_means();
    let l = base.block("lambda", m)?;
    let b = base.block("beta", m)?;
    Ok(RecoveryTable {
        difficulty: error_metrics(&means[b..b + m], &truth.items.difficulty)?,
        discrimination: error_metrics(&means[l..l + m], &truth.items.discrimination)?,
        ability: error_metrics(&posterior_mean_abilities(&base)?, &truth.abilities)?,
    })
}

/// Everything downstream of the fit for one strategy; writes the strategy directory.
pub fn analyse_strategy(
    cfg: &ExperimentConfig,
    data: &ResponseMatrix,
    truth: Option<&GroundTruth>,
    archive: &SampleArchive,
    dir: &Path,
) -> Result<StrategyReport> {
    archive.write_dir(dir).map_err(|e| Error::stage("write-archive", e))?;
    let base = postprocess_archive(archive).map_err(|e| Error::stage("postprocess", e))?;

    let grid = density_grid(cfg, &base).map_err(|e| Error::stage("density", e))?;
    let density = density_from_archive(&base, Some(&grid)).map_err(|e| Error::stage("density", e))?;
    write_density(&dir.join(DENSITY_FILE), &density, truth).map_err(|e| Error::stage("density", e))?;

    let pct = percentiles_from_archive(&base, cfg.analysis.truncation, cfg.seed)
        .map_err(|e| Error::stage("percentiles", e))?;
    write_percentiles(&dir.join(PERCENTILES_FILE), &pct, truth).map_err(|e| Error::stage("percentiles", e))?;

    let waic = waic_from_archive(&base, data).map_err(|e| Error::stage("waic", e))?;
    let efficiency =
        efficiency_report(&base, &ParameterSelection::Common).map_err(|e| Error::stage("diagnostics", e))?;
    let recovery = truth
        .map(|t| recovery(&base, t))
        .transpose()
        .map_err(|e| Error::stage("metrics", e))?;

    let report = StrategyReport {
        strategy: archive.meta.strategy.label(),
        config: archive.meta.strategy,
        n_individuals: archive.meta.n_individuals,
        n_items: archive.meta.n_items,
        n_draws: archive.n_draws(),
        waic,
        efficiency,
        recovery,
        density_modes: density.local_maxima().len(),
    };
    write_json(&dir.join(REPORT_FILE), &report).map_err(|e| Error::stage("report", e))?;
    Ok(report)
}

fn run_strategy(
    cfg: &ExperimentConfig,
    data: &ResponseMatrix,
    truth: Option<&GroundTruth>,
    strategy: &StrategyConfig,
    cell_dir: &Path,
) -> Result<StrategyReport> {
    let label = strategy.label();
    let stage = |s: &str| format!("{s}:{label}");
    let archive = run_chain(data, strategy, &cfg.priors, &cfg.chain_settings()).map_err(|e| Error::stage(stage("fit"), e))?;
    let dir = cell_dir.join(&label);
    io(&dir, fs::create_dir_all(&dir))?;
    analyse_strategy(cfg, data, truth, &archive, &dir).map_err(|e| match e {
        Error::Stage { stage: s, source } => Error::Stage {
            stage: stage(&s),
            source,
        },
        other => other,
    })
}

fn run_cell(cfg: &ExperimentConfig, cell_dir: &Path, size: (usize, usize)) -> Result<CellSummary> {
    io(cell_dir, fs::create_dir_all(cell_dir))?;
    let (truth, data) = match cfg.data_source()? {
        DataSource::Synthetic { scenario, .. } => {
            let truth = GroundTruth::simulate(scenario, cfg.model, size.0, size.1, cfg.seed)
                .map_err(|e| Error::stage("simulate", e))?;
            let data = simulate_responses(&truth, cfg.model, cfg.seed).map_err(|e| Error::stage("simulate", e))?;
            truth
                .write_csv(create(&cell_dir.join(TRUTH_FILE))?)
                .map_err(|e| Error::stage("simulate", e))?;
            (Some(truth), data)
        }
        DataSource::File(p) => (None, read_responses(&p).map_err(|e| Error::stage("data", e))?),
    };
    data.write_csv(create(&cell_dir.join(DATA_FILE))?)
        .map_err(|e| Error::stage("data", e))?;

    let strategies = cfg.strategies()?;
    let results: Vec<Result<StrategyReport>> = if cfg.parallel && strategies.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = strategies
                .iter()
                .map(|st| {
                    let (data, truth) = (&data, truth.as_ref());
                    s.spawn(move || run_strategy(cfg, data, truth, st, cell_dir))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numerical("strategy thread panicked".into()))))
                .collect()
        })
    } else {
        strategies
            .iter()
            .map(|st| run_strategy(cfg, &data, truth.as_ref(), st, cell_dir))
            .collect()
    };
    let strategies = results.into_iter().collect::<Result<Vec<_>>>()?;
    let eff: Vec<EfficiencyReport> = strategies.iter().map(|r| r.efficiency.clone()).collect();
    crate::diagnostics::write_csv(&eff, create(&cell_dir.join(EFFICIENCY_FILE))?)?;
    Ok(CellSummary {
        directory: cell_dir.to_path_buf(),
        n_individuals: data.n_individuals(),
        n_items: data.n_items(),
        strategies,
    })
}

/// Runs every cell and strategy of `cfg`, writing the bundle under `out`.
pub fn run_pipeline(cfg: &ExperimentConfig, out: &Path) -> Result<BundleSummary> {
    cfg.validate()?;
    io(out, fs::create_dir_all(out))?;
    write_json(&out.join(CONFIG_FILE), cfg)?;
    let cells = cfg.cells()?;
    let factorial = cfg.factorial.is_some();
    let mut summaries = Vec::with_capacity(cells.len());
    for size in cells {
        let dir = if factorial {
            out.join(format!("n{}_i{}", size.0, size.1))
        } else {
            out.to_path_buf()
        };
        let cell = run_cell(cfg, &dir, size)?;
        if factorial {
            write_json(&dir.join(SUMMARY_FILE), &cell)?;
        }
        summaries.push(cell);
    }
    let summary = BundleSummary {
        seed: cfg.seed,
        cells: summaries,
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Reloads the per-strategy reports of an existing bundle (or cell) directory.
pub fn collect_reports(dir: &Path) -> Result<Vec<StrategyReport>> {
    let mut out = Vec::new();
    let mut entries: Vec<PathBuf> = io(dir, fs::read_dir(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for p in entries {
        let report = p.join(REPORT_FILE);
        if report.is_file() {
            out.push(read_json(&report)?);
        } else {
            out.extend(collect_reports(&p)?);
        }
    }
    Ok(out)
}
