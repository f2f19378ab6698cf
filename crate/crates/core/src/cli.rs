//! Command-line front end: dataset files, result documents and exit codes.
//!
//! Exit codes: 0 success, 1 a check or computation failed, 2 invalid
//! arguments, input or I/O, 3 degenerate dataset.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimator::{advise_sample_size, estimate, EstimateResult, ADVICE_ANCHORS};
use crate::harness::{emit_outputs, run_experiment, ExperimentConfig, OutputPaths};
use crate::model::{PriorFamily, PriorSpec};
use crate::moments::{Dataset, SufficientStats};
use crate::numeric::format_real;
use crate::oracle::{run_suite, OracleOptions, Suite};
use crate::sampler::{generate_dataset, SamplerConfig, DEFAULT_DELTA_BETA};
use crate::seed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

/// Schema version of the estimate document.
pub const RESULT_VERSION: u32 = 1;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_)
        | Error::Capability { .. }
        | Error::Parse { .. }
        | Error::Io { .. } => EXIT_USAGE,
        Error::DegenerateMagnetization { .. } | Error::DegenerateObjective { .. } => {
            EXIT_DEGENERATE
        }
        Error::Numerical(_) => EXIT_FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bmeb",
    version,
    about = "Empirical Bayes hyperparameters of Boltzmann machines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a machine from the prior and write annealed samples from it.
    Generate(GenerateArgs),
    /// Estimate (H, gamma) from a dataset file.
    Estimate(EstimateArgs),
    /// Run a model-matched sweep described by a key=value config file.
    Experiment(ExperimentArgs),
    /// Run brute-force verification suites.
    Oracle(OracleArgs),
    /// Suggest a dataset size for a field guess.
    Advise(AdviseArgs),
}

#[derive(Debug, clap::Args)]
struct GenerateArgs {
    #[arg(long = "n")]
    n: usize,
    #[arg(long = "N")]
    n_samples: usize,
    #[arg(long = "H", default_value_t = 0.0, allow_negative_numbers = true)]
    h: f64,
    #[arg(long = "J")]
    j: f64,
    #[arg(long, value_enum, default_value_t = PriorArg::Gauss)]
    prior: PriorArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "delta-beta", default_value_t = DEFAULT_DELTA_BETA)]
    delta_beta: f64,
    #[arg(long, default_value_t = 1)]
    sweeps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PriorArg {
    Gauss,
    Laplace,
}

impl From<PriorArg> for PriorFamily {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Gauss => PriorFamily::Gaussian,
            PriorArg::Laplace => PriorFamily::Laplace,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, clap::Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed that produced the dataset, recorded in the output.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Psi,
    Georges,
    Mc,
    Ml,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Psi => Suite::Psi,
            SuiteArg::Georges => Suite::Georges,
            SuiteArg::Mc => Suite::Mc,
            SuiteArg::Ml => Suite::Ml,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Debug, clap::Args)]
struct OracleArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative error injected into a coefficient (negative control).
    #[arg(long, hide = true, default_value_t = 0.0)]
    perturb: f64,
}

#[derive(Debug, clap::Args)]
struct AdviseArgs {
    #[arg(long = "H", allow_negative_numbers = true)]
    h: f64,
    #[arg(long = "n")]
    n: usize,
}

/// Parse and execute a command line, returning the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a, out, err),
        Command::Estimate(a) => cmd_estimate(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::Oracle(a) => cmd_oracle(&a, out),
        Command::Advise(a) => cmd_advise(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

/// Text dataset: a header line `n N`, then `N` lines of `n` tokens in
/// `{-1, 1}`.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header 'n N'".into(),
    })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: hline + 1,
            message: format!("invalid header field '{s}'"),
        })
    };
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: hline + 1,
            message: format!("header must be 'n N', got '{}'", header.trim()),
        });
    }
    let (n, big_n) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut spins = Vec::with_capacity(n * big_n);
    let mut rows = 0;
    for (k, line) in lines {
        let line_no = k + 1;
        if rows == big_n {
            return Err(Error::Parse {
                line: line_no,
                message: format!("more than the {big_n} rows declared in the header"),
            });
        }
        let before = spins.len();
        for tok in line.split_whitespace() {
            spins.push(match tok {
                "1" | "+1" => 1,
                "-1" => -1,
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("token '{other}' is not -1 or +1"),
                    })
                }
            });
        }
        if spins.len() - before != n {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {n} spins, found {}", spins.len() - before),
            });
        }
        rows += 1;
    }
    if rows != big_n {
        return Err(Error::Parse {
            line: text.lines().count() + 1,
            message: format!("header declares {big_n} rows, found {rows}"),
        });
    }
    Dataset::new(n, spins)
}

pub fn format_dataset(data: &Dataset) -> String {
    let mut s = format!("{} {}\n", data.n(), data.len());
    for row in data.samples() {
        let toks: Vec<&str> = row
            .iter()
            .map(|&v| if v > 0 { "1" } else { "-1" })
            .collect();
        s.push_str(&toks.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_dataset(path: &Path) -> Result<(Dataset, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
        line: 0,
        message: format!("{} is not UTF-8 text", path.display()),
    })?;
    Ok((parse_dataset(&text)?, digest))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(64);
    for b in Sha256::digest(bytes).iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if !(a.j >= 0.0) || !a.j.is_finite() {
        return Err(Error::input(format!(
            "--J must be finite and >= 0, got {}",
            a.j
        )));
    }
    let prior = PriorSpec::new(a.prior.into(), a.j * a.j, a.h)?;
    let sampler = SamplerConfig {
        delta_beta: a.delta_beta,
        sweeps_per_beta: a.sweeps,
        track_weights: false,
    };
    sampler.validate()?;
    let machine_seed = seed::child(a.seed, seed::stream::MACHINE);
    let data_seed = seed::child(a.seed, seed::stream::DATA);
    let machine = prior.sample(a.n, machine_seed)?;
    let data = generate_dataset(&machine, a.n_samples, &sampler, data_seed)?;
    fs::write(&a.out, format_dataset(&data)).map_err(|e| Error::io(&a.out, e))?;
    let _ = writeln!(
        err,
        "seed {} -> machine seed {machine_seed}, data seed {data_seed}",
        a.seed
    );
    write_out(
        out,
        &format!("wrote {} ({} x {})\n", a.out.display(), a.n_samples, a.n),
    )?;
    Ok(EXIT_OK)
}

/// JSON number with 17 significant digits; non-finite values become strings.
fn json_real(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        format_real(x)
    } else {
        format!("\"{x}\"")
    };
    RawValue::from_string(text).expect("valid JSON literal")
}

#[derive(Serialize)]
struct DiagnosticsDoc {
    n: usize,
    #[serde(rename = "N")]
    n_samples: usize,
    magnetization: Box<RawValue>,
    entropy: Box<RawValue>,
    #[serde(rename = "Phi_M")]
    phi: Box<RawValue>,
    #[serde(rename = "phi2_M")]
    phi2: Box<RawValue>,
    linear_term: Option<Box<RawValue>>,
    quadratic_term: Option<Box<RawValue>>,
    laplace_ok: bool,
    laplace_margin: Box<RawValue>,
}

#[derive(Serialize)]
struct ResultDocument {
    version: u32,
    input_digest: String,
    seed: Option<u64>,
    branch: &'static str,
    gamma_hat: Box<RawValue>,
    #[serde(rename = "J_hat")]
    j_hat: Box<RawValue>,
    #[serde(rename = "H_hat")]
    h_hat: Option<Box<RawValue>>,
    diagnostics: DiagnosticsDoc,
}

/// JSON estimate document for `r`.
pub fn result_json(
    r: &EstimateResult,
    stats: &SufficientStats,
    digest: &str,
    seed: Option<u64>,
) -> String {
    let d = &r.diagnostics;
    let doc = ResultDocument {
        version: RESULT_VERSION,
        input_digest: format!("sha256:{digest}"),
        seed,
        branch: r.branch.as_str(),
        gamma_hat: json_real(r.gamma_hat),
        j_hat: json_real(r.j_hat),
        h_hat: r.h_hat.map(json_real),
        diagnostics: DiagnosticsDoc {
            n: stats.n,
            n_samples: stats.n_samples,
            magnetization: json_real(d.magnetization),
            entropy: json_real(d.entropy),
            phi: json_real(d.phi),
            phi2: json_real(d.phi2),
            linear_term: d.linear_term.map(json_real),
            quadratic_term: d.quadratic_term.map(json_real),
            laplace_ok: d.laplace_ok,
            laplace_margin: json_real(d.laplace_margin),
        },
    };
    serde_json::to_string_pretty(&doc).expect("serializable document") + "\n"
}

pub const RESULT_CSV_COLUMNS: [&str; 10] = [
    "branch",
    "gamma_hat",
    "J_hat",
    "H_hat",
    "magnetization",
    "Phi_M",
    "phi2_M",
    "laplace_ok",
    "laplace_margin",
    "input_digest",
];

pub fn result_csv(r: &EstimateResult, digest: &str) -> String {
    let d = &r.diagnostics;
    let row = [
        r.branch.to_string(),
        format_real(r.gamma_hat),
        format_real(r.j_hat),
        r.h_hat.map(format_real).unwrap_or_default(),
        format_real(d.magnetization),
        format_real(d.phi),
        format_real(d.phi2),
        d.laplace_ok.to_string(),
        format_real(d.laplace_margin),
        format!("sha256:{digest}"),
    ];
    format!("{}\n{}\n", RESULT_CSV_COLUMNS.join(","), row.join(","))
}

fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    let (data, digest) = read_dataset(&a.input)?;
    let stats = SufficientStats::from_dataset(&data);
    let r = estimate(&stats)?;
    let text = match a.format {
        Format::Json => result_json(&r, &stats, &digest, a.seed),
        Format::Csv => result_csv(&r, &digest),
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write) -> Result<i32> {
    let text = fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let config = ExperimentConfig::from_key_values(&text)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let summary = run_experiment(&config)?;
    for p in &summary.points {
        write_out(
            out,
            &format!(
                "J_true={} mean_J_hat={} sd_J_hat={} mae_H={} sd_H={} zero={} finite={} diverged={} error={}\n",
                p.j_true, p.mean_j_hat, p.sd_j_hat, p.mae_h, p.sd_h, p.n_zero, p.n_finite, p.n_diverged, p.n_error
            ),
        )?;
    }
    let paths = OutputPaths::in_dir(&a.out_dir);
    emit_outputs(&summary, &paths)?;
    write_out(out, &format!("wrote {}\n", a.out_dir.display()))?;
    Ok(EXIT_OK)
}

fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<i32> {
    let opts = OracleOptions {
        seed: a.seed,
        perturbation: a.perturb,
    };
    let report = run_suite(a.suite.into(), &opts)?;
    for c in report.failures() {
        write_out(out, &format!("{c}\n"))?;
    }
    for (suite, gap) in report.max_gaps() {
        let total = report.cases.iter().filter(|c| c.suite == suite).count();
        let failed = report.failures().filter(|c| c.suite == suite).count();
        write_out(
            out,
            &format!(
                "{suite}: {} passed, {failed} failed, max gap {gap:.3e}\n",
                total - failed
            ),
        )?;
    }
    let ok = report.passed();
    write_out(out, if ok { "PASS\n" } else { "FAIL\n" })?;
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_advise(a: &AdviseArgs, out: &mut dyn Write) -> Result<i32> {
    if !a.h.is_finite() {
        return Err(Error::input("--H must be finite"));
    }
    if a.n < 2 {
        return Err(Error::input(format!("--n must be >= 2, got {}", a.n)));
    }
    let mut text = format!("{}\n", advise_sample_size(a.h, a.n));
    text.push_str("anchors (|H| -> N):");
    for (h, size) in ADVICE_ANCHORS {
        let _ = write!(text, " {h} -> {}", advise_sample_size(h, a.n));
        if let crate::estimator::AnchorSize::PerSpin(alpha) = size {
            let _ = write!(text, " ({alpha} n)");
        }
        text.push(';');
    }
    text.pop();
    text.push('\n');
    write_out(out, &text)?;
    Ok(EXIT_OK)
}
