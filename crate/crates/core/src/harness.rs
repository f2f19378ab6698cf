//! Model-matched experiments: draw a machine from the prior, sample a
//! dataset from it, estimate, and aggregate over repeats for each point of a
//! `J_true` grid.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{estimate, Branch, EstimateResult};
use crate::model::{PriorFamily, PriorSpec};
use crate::moments::SufficientStats;
use crate::numeric::{format_real, mean_sd};
use crate::sampler::{generate_dataset, SamplerConfig};
use crate::seed;

pub const DEFAULT_REPEATS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    /// Samples per dataset, `N = alpha n`.
    pub n_samples: usize,
    pub h_true: f64,
    /// `J_true = sqrt(gamma_true)` values to sweep.
    pub j_grid: Vec<f64>,
    pub prior: PriorFamily,
    pub repeats: usize,
    pub master_seed: u64,
    pub sampler: SamplerConfig,
}

impl ExperimentConfig {
    pub fn new(n: usize, n_samples: usize, h_true: f64, j_grid: Vec<f64>) -> Self {
        ExperimentConfig {
            n,
            n_samples,
            h_true,
            j_grid,
            prior: PriorFamily::Gaussian,
            repeats: DEFAULT_REPEATS,
            master_seed: 0,
            sampler: SamplerConfig::default(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.n_samples as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::input(format!("n must be >= 2, got {}", self.n)));
        }
        if self.n_samples == 0 {
            return Err(Error::input("N must be >= 1"));
        }
        if self.repeats == 0 {
            return Err(Error::input("repeats must be >= 1"));
        }
        if !self.h_true.is_finite() {
            return Err(Error::input("H_true must be finite"));
        }
        if let Some(j) = self.j_grid.iter().find(|j| !(j.is_finite() && **j >= 0.0)) {
            return Err(Error::input(format!(
                "J_true must be finite and >= 0, got {j}"
            )));
        }
        self.sampler.validate()
    }

    /// Parse flat `key=value` lines. Blank lines and lines starting with `#`
    /// are skipped. `n`, `N` and `J_grid` (comma-separated) are required.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut n = None;
        let mut n_samples = None;
        let mut j_grid = None;
        let mut cfg = ExperimentConfig::new(0, 0, 0.0, Vec::new());
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
                value.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("invalid value '{value}' for {key}"),
                })
            }
            match key {
                "n" => n = Some(num(key, value, line_no)?),
                "N" => n_samples = Some(num(key, value, line_no)?),
                "H_true" => cfg.h_true = num(key, value, line_no)?,
                "J_grid" => {
                    j_grid = Some(
                        value
                            .split(',')
                            .map(str::trim)
                            .filter(|v| !v.is_empty())
                            .map(|v| num(key, v, line_no))
                            .collect::<Result<Vec<f64>>>()?,
                    )
                }
                "prior" => {
                    cfg.prior = value.parse().map_err(|e: Error| parse_err(e.to_string()))?
                }
                "repeats" => cfg.repeats = num(key, value, line_no)?,
                "seed" => cfg.master_seed = num(key, value, line_no)?,
                "delta_beta" => cfg.sampler.delta_beta = num(key, value, line_no)?,
                "sweeps" => cfg.sampler.sweeps_per_beta = num(key, value, line_no)?,
                other => return Err(parse_err(format!("unknown key '{other}'"))),
            }
        }
        cfg.n = n.ok_or_else(|| Error::input("config is missing required key 'n'"))?;
        cfg.n_samples =
            n_samples.ok_or_else(|| Error::input("config is missing required key 'N'"))?;
        cfg.j_grid =
            j_grid.ok_or_else(|| Error::input("config is missing required key 'J_grid'"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Seed of trial `trial` at grid point `grid_index`.
    pub fn trial_seed(&self, grid_index: usize, trial: usize) -> u64 {
        seed::derive(self.master_seed, &[grid_index as u64, trial as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub grid_index: usize,
    pub j_true: f64,
    pub trial: usize,
    pub seed: u64,
    /// The estimate, or the error message of a failed trial (for example a
    /// unanimous dataset).
    pub outcome: std::result::Result<EstimateResult, String>,
}

impl TrialRecord {
    pub fn branch(&self) -> Option<Branch> {
        self.outcome.as_ref().ok().map(|r| r.branch)
    }
}

/// One repeat: draw a machine, sample `N` configurations, estimate.
pub fn run_trial(
    config: &ExperimentConfig,
    grid_index: usize,
    trial: usize,
) -> Result<TrialRecord> {
    let j_true = *config
        .j_grid
        .get(grid_index)
        .ok_or_else(|| Error::input(format!("grid index {grid_index} out of range")))?;
    let trial_seed = config.trial_seed(grid_index, trial);
    let prior = PriorSpec::new(config.prior, j_true * j_true, config.h_true)?;
    let machine = prior.sample(config.n, seed::child(trial_seed, seed::stream::MACHINE))?;
    let data = generate_dataset(
        &machine,
        config.n_samples,
        &config.sampler,
        seed::child(trial_seed, seed::stream::DATA),
    )?;
    let stats = SufficientStats::from_dataset(&data);
    let outcome = estimate(&stats).map_err(|e| e.to_string());
    Ok(TrialRecord {
        grid_index,
        j_true,
        trial,
        seed: trial_seed,
        outcome,
    })
}

/// Aggregates at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub n: usize,
    pub n_samples: usize,
    pub h_true: f64,
    pub j_true: f64,
    pub prior: PriorFamily,
    pub repeats: usize,
    /// Over Zero and Finite trials.
    pub mean_j_hat: f64,
    pub sd_j_hat: f64,
    /// `mean |H_true - H_hat|` over trials with a defined `H_hat`.
    pub mae_h: f64,
    pub sd_h: f64,
    pub n_zero: usize,
    pub n_finite: usize,
    pub n_diverged: usize,
    pub n_error: usize,
    /// Fraction of Zero and Finite trials passing the Laplace check.
    pub laplace_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    /// Grid-major, then trial order.
    pub trials: Vec<TrialRecord>,
    pub points: Vec<GridSummary>,
}

pub fn summarize_point(
    config: &ExperimentConfig,
    j_true: f64,
    trials: &[TrialRecord],
) -> GridSummary {
    let mut j_hats = Vec::new();
    let mut h_hats = Vec::new();
    let mut abs_err = Vec::new();
    let (mut zero, mut finite, mut diverged, mut error, mut laplace) = (0, 0, 0, 0, 0);
    for t in trials {
        match &t.outcome {
            Err(_) => error += 1,
            Ok(r) => match r.branch {
                Branch::Diverged => diverged += 1,
                b => {
                    if b == Branch::Zero {
                        zero += 1;
                    } else {
                        finite += 1;
                    }
                    j_hats.push(r.j_hat);
                    if r.diagnostics.laplace_ok {
                        laplace += 1;
                    }
                    if let Some(h) = r.h_hat {
                        h_hats.push(h);
                        abs_err.push((config.h_true - h).abs());
                    }
                }
            },
        }
    }
    let (mean_j_hat, sd_j_hat) = mean_sd(&j_hats);
    let (_, sd_h) = mean_sd(&h_hats);
    let (mae_h, _) = mean_sd(&abs_err);
    GridSummary {
        n: config.n,
        n_samples: config.n_samples,
        h_true: config.h_true,
        j_true,
        prior: config.prior,
        repeats: trials.len(),
        mean_j_hat,
        sd_j_hat,
        mae_h,
        sd_h,
        n_zero: zero,
        n_finite: finite,
        n_diverged: diverged,
        n_error: error,
        laplace_rate: if j_hats.is_empty() {
            f64::NAN
        } else {
            laplace as f64 / j_hats.len() as f64
        },
    }
}

/// All trials of all grid points, in parallel; the result does not depend on
/// the number of worker threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.j_grid.len())
        .flat_map(|g| (0..config.repeats).map(move |t| (g, t)))
        .collect();
    let trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(g, t)| run_trial(config, g, t))
        .collect::<Result<_>>()?;
    let points = trials
        .chunks(config.repeats)
        .zip(&config.j_grid)
        .map(|(chunk, &j)| summarize_point(config, j, chunk))
        .collect();
    Ok(ExperimentSummary {
        config: config.clone(),
        trials,
        points,
    })
}

pub const TRIAL_COLUMNS: [&str; 14] = [
    "n",
    "N",
    "H_true",
    "J_true",
    "prior",
    "trial",
    "seed",
    "branch",
    "gamma_hat",
    "J_hat",
    "H_hat",
    "phi2_M",
    "Phi_M",
    "laplace_ok",
];

pub const SUMMARY_COLUMNS: [&str; 14] = [
    "n",
    "N",
    "H_true",
    "J_true",
    "prior",
    "repeats",
    "mean_J_hat",
    "sd_J_hat",
    "mae_H",
    "sd_H",
    "n_zero",
    "n_finite",
    "n_diverged",
    "n_error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub trials: PathBuf,
    pub summary: PathBuf,
    /// `J_true, mean_J_hat, sd_J_hat`.
    pub plot_j_hat: PathBuf,
    /// `J_true, mae_H, sd_H`.
    pub plot_h_hat: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        OutputPaths {
            trials: dir.join("trials.csv"),
            summary: dir.join("summary.csv"),
            plot_j_hat: dir.join("plot_j_hat.csv"),
            plot_h_hat: dir.join("plot_h_hat.csv"),
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line: 0,
            message: format!("{}: {other:?}", path.display()),
        },
    }
}

fn write_rows<const K: usize>(
    path: &Path,
    header: [&str; K],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn trial_row(config: &ExperimentConfig, t: &TrialRecord) -> Vec<String> {
    let mut row = vec![
        config.n.to_string(),
        config.n_samples.to_string(),
        format_real(config.h_true),
        format_real(t.j_true),
        config.prior.to_string(),
        t.trial.to_string(),
        t.seed.to_string(),
    ];
    match &t.outcome {
        Ok(r) => row.extend([
            r.branch.to_string(),
            format_real(r.gamma_hat),
            format_real(r.j_hat),
            r.h_hat.map(format_real).unwrap_or_default(),
            format_real(r.diagnostics.phi2),
            format_real(r.diagnostics.phi),
            r.diagnostics.laplace_ok.to_string(),
        ]),
        Err(_) => row.extend(
            ["error".to_string()]
                .into_iter()
                .chain(std::iter::repeat_n(String::new(), 6)),
        ),
    }
    row
}

fn summary_row(p: &GridSummary) -> Vec<String> {
    vec![
        p.n.to_string(),
        p.n_samples.to_string(),
        format_real(p.h_true),
        format_real(p.j_true),
        p.prior.to_string(),
        p.repeats.to_string(),
        format_real(p.mean_j_hat),
        format_real(p.sd_j_hat),
        format_real(p.mae_h),
        format_real(p.sd_h),
        p.n_zero.to_string(),
        p.n_finite.to_string(),
        p.n_diverged.to_string(),
        p.n_error.to_string(),
    ]
}

/// Write the trial and summary tables plus the two plot-data tables.
pub fn emit_outputs(summary: &ExperimentSummary, paths: &OutputPaths) -> Result<()> {
    let cfg = &summary.config;
    write_rows(
        &paths.trials,
        TRIAL_COLUMNS,
        summary.trials.iter().map(|t| trial_row(cfg, t)),
    )?;
    write_rows(
        &paths.summary,
        SUMMARY_COLUMNS,
        summary.points.iter().map(summary_row),
    )?;
    write_rows(
        &paths.plot_j_hat,
        ["J_true", "mean_J_hat", "sd_J_hat"],
        summary.points.iter().map(|p| {
            vec![
                format_real(p.j_true),
                format_real(p.mean_j_hat),
                format_real(p.sd_j_hat),
            ]
        }),
    )?;
    write_rows(
        &paths.plot_h_hat,
        ["J_true", "mae_H", "sd_H"],
        summary.points.iter().map(|p| {
            vec![
                format_real(p.j_true),
                format_real(p.mae_h),
                format_real(p.sd_h),
            ]
        }),
    )
}

/// Read a summary table written by [`emit_outputs`]. The Laplace rate is not
/// part of the file and comes back as NaN.
pub fn read_summary_csv(path: &Path) -> Result<Vec<GridSummary>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(SUMMARY_COLUMNS) {
        return Err(Error::Parse {
            line: 1,
            message: format!("{}: unexpected header", path.display()),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = k + 2;
        let field = |i: usize| rec.get(i).unwrap_or("");
        fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
            s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid field '{s}'"),
            })
        }
        out.push(GridSummary {
            n: parse(field(0), line)?,
            n_samples: parse(field(1), line)?,
            h_true: parse(field(2), line)?,
            j_true: parse(field(3), line)?,
            prior: field(4).parse()?,
            repeats: parse(field(5), line)?,
            mean_j_hat: parse(field(6), line)?,
            sd_j_hat: parse(field(7), line)?,
            mae_h: parse(field(8), line)?,
            sd_h: parse(field(9), line)?,
            n_zero: parse(field(10), line)?,
            n_finite: parse(field(11), line)?,
            n_diverged: parse(field(12), line)?,
            n_error: parse(field(13), line)?,
            laplace_rate: f64::NAN,
        });
    }
    Ok(out)
}
