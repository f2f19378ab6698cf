//! Named batteries of oracle checks with a pass/fail report.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::evidence::{eb_likelihood_mc, eb_likelihood_mc_with, EvidenceEstimate, Proposal};
use super::ml::{gamma_from_couplings, ml_fit_exact};
use super::replica::{georges_check_with, psi_identity_check};
use crate::error::{Error, Result};
use crate::estimator::{eb_likelihood_approx, estimate, Branch};
use crate::model::PriorSpec;
use crate::moments::{Dataset, SufficientStats};
use crate::numeric::artanh;
use crate::sampler::{generate_dataset, SamplerConfig};
use crate::seed;

pub const PSI_TOLERANCE: f64 = 1e-9;
pub const GEORGES_TOLERANCE: f64 = 1e-10;
pub const CENTERING_TOLERANCE: f64 = 1e-12;
pub const MOMENT_MATCH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Psi,
    Georges,
    Mc,
    Ml,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psi" => Ok(Suite::Psi),
            "georges" => Ok(Suite::Georges),
            "mc" => Ok(Suite::Mc),
            "ml" => Ok(Suite::Ml),
            "all" => Ok(Suite::All),
            other => Err(Error::input(format!(
                "unknown suite '{other}' (expected psi, georges, mc, ml or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub seed: u64,
    /// Relative error injected into the second-order coefficient on the
    /// formula side of the Georges check. Zero except in negative controls.
    pub perturbation: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            seed: 0,
            perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub suite: &'static str,
    /// Inputs of the case, enough to reproduce it.
    pub case: String,
    pub gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CaseReport {
    fn new(suite: &'static str, case: String, gap: f64, tolerance: f64) -> Self {
        CaseReport {
            suite,
            case,
            gap,
            tolerance,
            passed: gap <= tolerance,
        }
    }
}

impl fmt::Display for CaseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: gap {:.3e} (tolerance {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.case,
            self.gap,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub cases: Vec<CaseReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases.iter().filter(|c| !c.passed)
    }

    /// Largest gap per suite, in first-seen order.
    pub fn max_gaps(&self) -> Vec<(&'static str, f64)> {
        let mut out: Vec<(&'static str, f64)> = Vec::new();
        for c in &self.cases {
            match out.iter_mut().find(|(s, _)| *s == c.suite) {
                Some((_, g)) => *g = g.max(c.gap),
                None => out.push((c.suite, c.gap)),
            }
        }
        out
    }
}

pub fn run_suite(suite: Suite, opts: &OracleOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    let pick = |s: Suite| suite == s || suite == Suite::All;
    if pick(Suite::Psi) {
        report.cases.extend(psi_suite(opts.seed)?);
    }
    if pick(Suite::Georges) {
        report
            .cases
            .extend(georges_suite(opts.seed, opts.perturbation)?);
    }
    if pick(Suite::Mc) {
        report.cases.extend(mc_suite(opts.seed)?);
    }
    if pick(Suite::Ml) {
        report.cases.extend(ml_suite(opts.seed)?);
    }
    Ok(report)
}

fn random_dataset(rng: &mut seed::Rng, n: usize, big_n: usize) -> Dataset {
    let spins = (0..n * big_n)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    Dataset::new(n, spins).expect("valid shape")
}

/// The three-spin, two-sample dataset used across the examples.
pub fn hand_dataset() -> Dataset {
    Dataset::new(3, vec![1, 1, -1, 1, -1, -1]).expect("valid shape")
}

/// Randomized replica-identity cases: `n <= 4`, `tau <= 3`, `gamma <= 0.5`,
/// `|H| <= 0.5`.
pub fn psi_suite(master: u64) -> Result<Vec<CaseReport>> {
    let mut rng = seed::rng_from(seed::derive(master, &[0x9e1]));
    let mut out = Vec::new();
    let c = psi_identity_check(&hand_dataset(), 0.1, 0.3, 2)?;
    out.push(CaseReport::new(
        "psi",
        "hand dataset n=3 N=2 tau=2 H=0.1 gamma=0.3".into(),
        c.gap,
        PSI_TOLERANCE,
    ));
    for _ in 0..50 {
        let n = rng.random_range(2..=4);
        let big_n = rng.random_range(1..=5);
        let tau = rng.random_range(1..=3);
        let h = rng.random_range(-0.5..=0.5);
        let gamma = rng.random_range(0.0..=0.5);
        let data = random_dataset(&mut rng, n, big_n);
        let c = psi_identity_check(&data, h, gamma, tau)?;
        out.push(CaseReport::new(
            "psi",
            format!(
                "n={n} N={big_n} tau={tau} H={h} gamma={gamma} data={:?}",
                data.as_flat()
            ),
            c.gap,
            PSI_TOLERANCE,
        ));
    }
    Ok(out)
}

/// Georges-operator identities for `n in {3, 4}`, `tau in {2, 3}`,
/// `m in {0, +-0.3, +-0.7}`. Gaps are relative with a floor of 1.
pub fn georges_suite(master: u64, perturbation: f64) -> Result<Vec<CaseReport>> {
    let mut rng = seed::rng_from(seed::derive(master, &[0x9e2]));
    let mut out = Vec::new();
    let mut cases = vec![(hand_dataset(), 2, 0.4)];
    for n in [3, 4] {
        let data = random_dataset(&mut rng, n, 3);
        for tau in [2, 3] {
            for m in [0.0, 0.3, -0.3, 0.7, -0.7] {
                cases.push((data.clone(), tau, m));
            }
        }
    }
    for (data, tau, m) in cases {
        let c = georges_check_with(&data, m, tau, perturbation)?;
        let label = format!(
            "n={} N={} tau={tau} m={m} data={:?}",
            data.n(),
            data.len(),
            data.as_flat()
        );
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        out.push(CaseReport::new(
            "georges",
            format!("first order {label}"),
            rel(c.interaction_mean, c.interaction_formula),
            GEORGES_TOLERANCE,
        ));
        out.push(CaseReport::new(
            "georges",
            format!("second order {label}"),
            rel(c.operator_square, c.operator_square_formula),
            GEORGES_TOLERANCE,
        ));
        out.push(CaseReport::new(
            "georges",
            format!("centering {label}"),
            c.operator_mean.abs() / c.operator_square.sqrt().max(1.0),
            CENTERING_TOLERANCE,
        ));
    }
    Ok(out)
}

/// Evidence values over a grid of `gamma` at fixed `H`, next to the value at
/// the estimator's `gamma_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatTopReport {
    pub branch: Branch,
    pub gamma_hat: f64,
    pub h: f64,
    pub at_estimate: EvidenceEstimate,
    pub grid: Vec<(f64, EvidenceEstimate)>,
    /// Grid maximum minus the value at `gamma_hat`.
    pub shortfall: f64,
    /// Two combined standard errors.
    pub allowance: f64,
}

impl FlatTopReport {
    pub fn passed(&self) -> bool {
        self.shortfall <= self.allowance
    }
}

/// Sizes of the flat-top check.
pub const FLAT_TOP_SPINS: usize = 8;
pub const FLAT_TOP_SAMPLES: usize = 40;
pub const FLAT_TOP_DRAWS: usize = 20_000;
pub const FLAT_TOP_GRID: usize = 16;
/// Generating hyperparameters of the flat-top data.
pub const FLAT_TOP_J: f64 = 0.5;
pub const FLAT_TOP_H: f64 = 0.1;

/// Synthetic `n = 8`, `N = 40` data from a Gaussian-prior machine
/// (`J = 0.5`, `H = 0.1`); checks that `gamma_hat` sits within two Monte
/// Carlo standard errors of the best grid value of the evidence.
pub fn evidence_flat_top(master: u64) -> Result<FlatTopReport> {
    evidence_flat_top_at(master, FLAT_TOP_J, FLAT_TOP_H)
}

fn flat_top_data(master: u64, j_true: f64, h_true: f64) -> Result<Dataset> {
    let prior = PriorSpec::gaussian(j_true * j_true, h_true)?;
    let machine = prior.sample(
        FLAT_TOP_SPINS,
        seed::derive(master, &[0xf1a7, seed::stream::MACHINE]),
    )?;
    generate_dataset(
        &machine,
        FLAT_TOP_SAMPLES,
        &SamplerConfig::default(),
        seed::derive(master, &[0xf1a7, seed::stream::DATA]),
    )
}

/// Gap between the approximate and the Monte Carlo evidence at small `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub h: f64,
    /// `(gamma, MC evidence, approximate evidence)`.
    pub points: Vec<(f64, EvidenceEstimate, f64)>,
    /// Least-squares slope of `ln |gap|` against `ln gamma`.
    pub slope: f64,
}

/// Gammas at which [`evidence_truncation_order`] compares the evidences.
pub const TRUNCATION_GAMMAS: [f64; 4] = [0.03, 0.045, 0.0675, 0.10125];

/// The approximate evidence is exact through second order in `gamma`, so
/// its gap to the exact evidence should grow like `gamma^3` or faster. Uses the
/// flat-top data and `H = H_hat`.
pub fn evidence_truncation_order(master: u64) -> Result<TruncationReport> {
    let data = flat_top_data(master, FLAT_TOP_J, FLAT_TOP_H)?;
    let stats = SufficientStats::from_dataset(&data);
    let est = estimate(&stats)?;
    let h = est.h_hat.unwrap_or_else(|| artanh(stats.magnetization));
    let mc_seed = seed::derive(master, &[0x7c3, 1]);
    let mut points = Vec::new();
    for g in TRUNCATION_GAMMAS {
        let mc = eb_likelihood_mc_with(
            &data,
            &PriorSpec::gaussian(g, h)?,
            4 * FLAT_TOP_DRAWS,
            mc_seed,
            Proposal::DEFAULT_POSTERIOR,
        )?;
        let approx = eb_likelihood_approx(h, g, &stats)?.value;
        points.push((g, mc, approx));
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|(g, mc, a)| (g.ln(), (mc.value - a).abs().ln()))
        .collect();
    let k = xy.len() as f64;
    let (mx, my) = (
        xy.iter().map(|p| p.0).sum::<f64>() / k,
        xy.iter().map(|p| p.1).sum::<f64>() / k,
    );
    let slope = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / xy.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Ok(TruncationReport { h, points, slope })
}

/// [`evidence_flat_top`] with other generating hyperparameters.
pub fn evidence_flat_top_at(master: u64, j_true: f64, h_true: f64) -> Result<FlatTopReport> {
    let data = flat_top_data(master, j_true, h_true)?;
    let stats = SufficientStats::from_dataset(&data);
    let est = estimate(&stats)?;
    let h = est.h_hat.unwrap_or_else(|| artanh(stats.magnetization));
    let mc_seed = seed::derive(master, &[0xf1a7, 2]);
    let evidence = |gamma: f64| {
        eb_likelihood_mc_with(
            &data,
            &PriorSpec::gaussian(gamma, h)?,
            FLAT_TOP_DRAWS,
            mc_seed,
            Proposal::DEFAULT_POSTERIOR,
        )
    };
    let top = if est.branch == Branch::Finite {
        (3.0 * est.gamma_hat).max(0.5)
    } else {
        0.5
    };
    let grid = (0..=FLAT_TOP_GRID)
        .map(|k| {
            let g = top * k as f64 / FLAT_TOP_GRID as f64;
            evidence(g).map(|e| (g, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let (at_estimate, shortfall, allowance) = if est.branch == Branch::Diverged {
        let nan = EvidenceEstimate {
            value: f64::NEG_INFINITY,
            std_error: 0.0,
            draws: 0,
        };
        (nan, f64::INFINITY, 0.0)
    } else {
        let at = evidence(est.gamma_hat)?;
        let best = grid
            .iter()
            .map(|(_, e)| *e)
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .expect("non-empty grid");
        let allowance = 2.0 * (at.std_error.powi(2) + best.std_error.powi(2)).sqrt();
        (at, best.value - at.value, allowance)
    };
    Ok(FlatTopReport {
        branch: est.branch,
        gamma_hat: est.gamma_hat,
        h,
        at_estimate,
        grid,
        shortfall,
        allowance,
    })
}

pub fn mc_suite(master: u64) -> Result<Vec<CaseReport>> {
    let mut out = Vec::new();

    let one = Dataset::new(4, vec![1, -1, 1, 1])?;
    let h = 0.25;
    let e = eb_likelihood_mc(&one, &PriorSpec::gaussian(0.0, h)?, 100, master)?;
    let want = h * 0.5 - (2.0 * h.cosh()).ln();
    out.push(CaseReport::new(
        "mc",
        "single sample, gamma=0, H=0.25".into(),
        (e.value - want).abs() + e.std_error,
        1e-15,
    ));

    let mut rng = seed::rng_from(seed::derive(master, &[0x9e3]));
    let data = random_dataset(&mut rng, 6, 12);
    let prior = PriorSpec::gaussian(0.4, 0.05)?;
    let a = eb_likelihood_mc(&data, &prior, 20_000, seed::derive(master, &[0x9e3, 1]))?;
    let b = eb_likelihood_mc(&data, &prior, 20_000, seed::derive(master, &[0x9e3, 2]))?;
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    out.push(CaseReport::new(
        "mc",
        format!(
            "seed agreement (units of combined se) n=6 N=12 gamma=0.4 H=0.05 data={:?}",
            data.as_flat()
        ),
        (a.value - b.value).abs() / se,
        3.0,
    ));

    // A wrong second-order coefficient leaves a gamma^2 gap (slope 2).
    let t = evidence_truncation_order(master)?;
    out.push(CaseReport::new(
        "mc",
        format!(
            "approximation error order n=8 N=40 H={} (3 - slope, floored at 0), slope {}",
            t.h, t.slope
        ),
        (3.0 - t.slope).max(0.0),
        0.5,
    ));
    Ok(out)
}

pub fn ml_suite(master: u64) -> Result<Vec<CaseReport>> {
    let mut out = Vec::new();

    let sym = Dataset::new(2, vec![1, 1, 1, -1, -1, 1, -1, -1])?;
    let fit = ml_fit_exact(&sym)?;
    let gap = fit
        .couplings
        .iter()
        .fold(fit.field.abs(), |acc, v| acc.max(v.abs()));
    out.push(CaseReport::new(
        "ml",
        "symmetric fixed point".into(),
        gap,
        1e-12,
    ));

    let n = 8;
    let big_n = 100_000;
    let gamma_true = 0.5;
    let prior = PriorSpec::gaussian(gamma_true, 0.1)?;
    let machine = prior.sample(n, seed::derive(master, &[0x9e4, seed::stream::MACHINE]))?;
    let data = generate_dataset(
        &machine,
        big_n,
        &SamplerConfig::default(),
        seed::derive(master, &[0x9e4, seed::stream::DATA]),
    )?;
    let fit = ml_fit_exact(&data)?;
    let moments = fit.machine(n)?.exact_moments()?;
    let stats = SufficientStats::from_dataset(&data);
    let site_gap = (moments.site.iter().sum::<f64>() - stats.site_means.iter().sum::<f64>()).abs();
    let pair_gap = moments
        .pair
        .iter()
        .zip(&stats.pair_means)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    out.push(CaseReport::new(
        "ml",
        format!("moment matching n={n} N={big_n}"),
        site_gap.max(pair_gap),
        MOMENT_MATCH_TOLERANCE,
    ));

    let pairs = fit.couplings.len() as f64;
    let gamma_ml = gamma_from_couplings(n, &fit.couplings);
    let se = gamma_true * (2.0 / pairs).sqrt();
    out.push(CaseReport::new(
        "ml",
        format!("N>>n variance (units of se) gamma_true={gamma_true} gamma_ml={gamma_ml}"),
        (gamma_ml - gamma_true).abs() / se,
        3.0,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_suite() {
        assert_eq!("georges".parse::<Suite>().unwrap(), Suite::Georges);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn psi_and_georges_pass() {
        let r = run_suite(Suite::Psi, &OracleOptions::default()).unwrap();
        assert_eq!(r.cases.len(), 51);
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        let r = run_suite(Suite::Georges, &OracleOptions::default()).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn perturbed_coefficient_fails() {
        let opts = OracleOptions {
            seed: 0,
            perturbation: 1e-6,
        };
        let r = run_suite(Suite::Georges, &opts).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn max_gaps_per_suite() {
        let r = SuiteReport {
            cases: vec![
                CaseReport::new("a", String::new(), 1.0, 2.0),
                CaseReport::new("b", String::new(), 3.0, 2.0),
                CaseReport::new("a", String::new(), 1.5, 2.0),
            ],
        };
        assert_eq!(r.max_gaps(), vec![("a", 1.5), ("b", 3.0)]);
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
    }
}
