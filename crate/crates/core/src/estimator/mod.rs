//! Closed-form empirical Bayes estimates of the coupling scale `gamma` and
//! the field `H`.
//!
//! The approximate log-evidence is
//!
//! ```text
//! L(H, gamma) ~ H M - extr_m [ H m - e(m) + Phi(m) gamma + phi2(m) gamma^2 ]
//! ```
//!
//! Its `H`-stationarity pins `m = M`, after which `gamma` maximizes the
//! quadratic `-Phi(M) gamma - phi2(M) gamma^2` and `H` follows
//! from the `m`-stationarity. No iteration is involved.

mod advice;
mod plefka;

pub use advice::{
    advise_sample_size, laplace_assumption_diagnostic, AnchorSize, LaplaceDiagnostic,
    ADVICE_ANCHORS,
};
pub use plefka::{
    d_phi1_dm, d_phi2_dm, mean_field_entropy, phi1_general, phi2_general, phi2_minus1,
    Coefficients, Phi, PlefkaContext,
};

use std::fmt;

use crate::error::{Error, Result};
use crate::moments::SufficientStats;
use crate::numeric::{artanh, bisect};

/// Estimates require `|M| <= 1 - MAGNETIZATION_GUARD`.
pub const MAGNETIZATION_GUARD: f64 = 1e-12;

/// Relative width of the zero band used when classifying the signs of
/// `phi2(M)` and `Phi(M)`.
pub const SIGN_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `gamma_hat = 0`.
    Zero,
    /// `gamma_hat = -Phi(M) / (2 phi2(M)) > 0`.
    Finite,
    /// The objective is unbounded in `gamma`.
    Diverged,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Zero => "zero",
            Branch::Finite => "finite",
            Branch::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    pub branch: Branch,
    pub gamma: f64,
}

/// Maximize `-b gamma - a gamma^2` over `gamma >= 0`, where `a = phi2(M)` and
/// `b = Phi(M)`. Values within `SIGN_THRESHOLD * max(1, |a| + |b|)` of zero
/// are treated as zero.
pub fn classify_gamma(a: f64, b: f64) -> Result<GammaEstimate> {
    let theta = SIGN_THRESHOLD * (a.abs() + b.abs()).max(1.0);
    let sign = |v: f64| {
        if v > theta {
            1
        } else if v < -theta {
            -1
        } else {
            0
        }
    };
    let zero = GammaEstimate {
        branch: Branch::Zero,
        gamma: 0.0,
    };
    let diverged = GammaEstimate {
        branch: Branch::Diverged,
        gamma: f64::INFINITY,
    };
    match (sign(a), sign(b)) {
        (0, 0) => Err(Error::DegenerateObjective { phi: b, phi2: a }),
        (1, -1) => Ok(GammaEstimate {
            branch: Branch::Finite,
            gamma: -b / (2.0 * a),
        }),
        (1, _) | (0, 1) => Ok(zero),
        _ => Ok(diverged),
    }
}

pub fn estimate_gamma(stats: &SufficientStats) -> Result<GammaEstimate> {
    let c = Coefficients::new(stats);
    let m = stats.magnetization;
    classify_gamma(c.phi2(m), c.phi(m))
}

fn check_magnetization(m: f64) -> Result<()> {
    if !(m.abs() <= 1.0 - MAGNETIZATION_GUARD) {
        return Err(Error::DegenerateMagnetization {
            magnetization: m.abs(),
        });
    }
    Ok(())
}

/// `H_hat = artanh(M) - (phi1'(M) gamma + phi2'(M) gamma^2)`.
pub fn estimate_h(stats: &SufficientStats, gamma: f64) -> Result<f64> {
    let m = stats.magnetization;
    check_magnetization(m)?;
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::input(format!(
            "gamma must be finite and >= 0, got {gamma}"
        )));
    }
    let c = Coefficients::new(stats);
    Ok(artanh(m) - (c.d_phi1(m) * gamma + c.d_phi2(m) * gamma * gamma))
}

/// Term magnitudes of the approximate evidence at `m = M`, plus the Laplace
/// prior check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub magnetization: f64,
    /// `e(M)`.
    pub entropy: f64,
    /// `Phi(M)`.
    pub phi: f64,
    /// `phi2(M)`.
    pub phi2: f64,
    /// `Phi(M) * gamma_hat`; `None` when diverged.
    pub linear_term: Option<f64>,
    /// `phi2(M) * gamma_hat^2`; `None` when diverged.
    pub quadratic_term: Option<f64>,
    pub laplace_ok: bool,
    pub laplace_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub branch: Branch,
    pub gamma_hat: f64,
    /// `sqrt(gamma_hat)`.
    pub j_hat: f64,
    /// Absent when diverged.
    pub h_hat: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// Statistics to `(gamma_hat, H_hat)` in closed form.
pub fn estimate(stats: &SufficientStats) -> Result<EstimateResult> {
    let m = stats.magnetization;
    check_magnetization(m)?;
    let c = Coefficients::new(stats);
    let (phi, phi2) = (c.phi(m), c.phi2(m));
    let GammaEstimate { branch, gamma } = classify_gamma(phi2, phi)?;
    let h_hat = match branch {
        Branch::Diverged => None,
        _ => Some(estimate_h(stats, gamma)?),
    };
    let laplace = match branch {
        Branch::Zero => LaplaceDiagnostic {
            ok: true,
            margin: f64::INFINITY,
        },
        Branch::Finite => laplace_assumption_diagnostic(stats, gamma)?,
        Branch::Diverged => LaplaceDiagnostic {
            ok: false,
            margin: 0.0,
        },
    };
    let finite = branch != Branch::Diverged;
    Ok(EstimateResult {
        branch,
        gamma_hat: gamma,
        j_hat: gamma.sqrt(),
        h_hat,
        diagnostics: Diagnostics {
            magnetization: m,
            entropy: mean_field_entropy(m)?,
            phi,
            phi2,
            linear_term: finite.then_some(phi * gamma),
            quadratic_term: finite.then_some(phi2 * gamma * gamma),
            laplace_ok: laplace.ok,
            laplace_margin: laplace.margin,
        },
    })
}

/// The bracketed objective `H m - e(m) + Phi(m) gamma + phi2(m) gamma^2`.
pub fn eb_objective(m: f64, h: f64, gamma: f64, stats: &SufficientStats) -> Result<f64> {
    let c = Coefficients::new(stats);
    Ok(h * m - mean_field_entropy(m)? + c.phi(m) * gamma + c.phi2(m) * gamma * gamma)
}

/// `d/dm` of [`eb_objective`].
pub fn eb_objective_slope(m: f64, h: f64, gamma: f64, stats: &SufficientStats) -> f64 {
    let c = Coefficients::new(stats);
    h - artanh(m) + c.d_phi1(m) * gamma + c.d_phi2(m) * gamma * gamma
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxLikelihood {
    /// `H M - objective(m*)`.
    pub value: f64,
    /// The stationary point used.
    pub m_star: f64,
}

/// Grid resolution for bracketing stationary points of the objective.
const ROOT_GRID: usize = 4000;

/// Approximate log-evidence at `(H, gamma)`.
///
/// Stationary points of the objective in `m` are bracketed on a uniform grid
/// over `(-1, 1)` and refined by bisection. When several exist the one with
/// the largest objective is used; at `gamma = 0` the objective is strictly
/// concave and the point is unique.
pub fn eb_likelihood_approx(
    h: f64,
    gamma: f64,
    stats: &SufficientStats,
) -> Result<ApproxLikelihood> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::input(format!(
            "gamma must be finite and >= 0, got {gamma}"
        )));
    }
    let slope = |m: f64| eb_objective_slope(m, h, gamma, stats);
    let edge = 1.0 - MAGNETIZATION_GUARD;
    let grid: Vec<f64> = (0..=ROOT_GRID)
        .map(|k| -edge + 2.0 * edge * k as f64 / ROOT_GRID as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&m| slope(m)).collect();

    let mut roots = Vec::new();
    for k in 0..ROOT_GRID {
        let (a, b) = (values[k], values[k + 1]);
        if a == 0.0 {
            roots.push(grid[k]);
        } else if (a < 0.0) != (b < 0.0) && b != 0.0 {
            roots.push(bisect(slope, grid[k], grid[k + 1]));
        }
    }
    if values[ROOT_GRID] == 0.0 {
        roots.push(grid[ROOT_GRID]);
    }
    if roots.is_empty() {
        return Err(Error::Numerical(format!(
            "no stationary point of the objective in (-1, 1) for H = {h}, gamma = {gamma} \
             (slope {} at the left edge, {} at the right)",
            values[0], values[ROOT_GRID]
        )));
    }
    let mut best: Option<(f64, f64)> = None;
    for m in roots {
        let obj = eb_objective(m, h, gamma, stats)?;
        if best.is_none_or(|(_, b)| obj > b) {
            best = Some((m, obj));
        }
    }
    let (m_star, obj) = best.expect("non-empty roots");
    Ok(ApproxLikelihood {
        value: h * stats.magnetization - obj,
        m_star,
    })
}
