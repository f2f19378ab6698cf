//! Heuristics around the estimator: dataset-size advice and the Laplace-prior
//! validity check.

use crate::error::{Error, Result};
use crate::moments::SufficientStats;

/// Sample-size anchors `(|H|, N)` observed to work well empirically. At
/// `|H| = 0` the advice scales with the system size (`N = 0.4 n`); the other
/// anchors are absolute counts.
pub const ADVICE_ANCHORS: [(f64, AnchorSize); 3] = [
    (0.0, AnchorSize::PerSpin(0.4)),
    (0.2, AnchorSize::Absolute(30.0)),
    (0.4, AnchorSize::Absolute(5.0)),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnchorSize {
    PerSpin(f64),
    Absolute(f64),
}

impl AnchorSize {
    fn resolve(self, n: usize) -> f64 {
        match self {
            AnchorSize::PerSpin(alpha) => alpha * n as f64,
            AnchorSize::Absolute(v) => v,
        }
    }
}

/// Heuristic dataset size for a field guess: piecewise-linear in `|H|`
/// between the anchors, flat beyond the last one. Never below 1.
pub fn advise_sample_size(h_guess: f64, n: usize) -> usize {
    let h = h_guess.abs();
    let pts: Vec<(f64, f64)> = ADVICE_ANCHORS
        .iter()
        .map(|&(a, s)| (a, s.resolve(n)))
        .collect();
    let value = if h.is_nan() || h <= pts[0].0 {
        pts[0].1
    } else if h >= pts[pts.len() - 1].0 {
        pts[pts.len() - 1].1
    } else {
        let k = pts.windows(2).position(|w| h <= w[1].0).unwrap_or(0);
        let ((x0, y0), (x1, y1)) = (pts[k], pts[k + 1]);
        y0 + (y1 - y0) * (h - x0) / (x1 - x0)
    };
    (value.round() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceDiagnostic {
    /// `xi > N (1 + max |d_ij|)`.
    pub ok: bool,
    /// `xi / (N (1 + max |d_ij|))`.
    pub margin: f64,
}

/// Checks `xi = sqrt(2n / gamma)` against `N (1 + max |d_ij|)`. This is a
/// conservative stand-in for the bound on the replicated pair sums that the
/// Laplace/Gaussian equivalence needs; the exact replicated sums have no
/// finite realization at negative replica number.
pub fn laplace_assumption_diagnostic(
    stats: &SufficientStats,
    gamma: f64,
) -> Result<LaplaceDiagnostic> {
    if !(gamma > 0.0) {
        return Err(Error::input(format!(
            "Laplace diagnostic needs gamma > 0, got {gamma}"
        )));
    }
    let xi = (2.0 * stats.n as f64 / gamma).sqrt();
    let bound = stats.n_samples as f64 * (1.0 + stats.max_abs_pair_mean);
    let margin = xi / bound;
    Ok(LaplaceDiagnostic {
        ok: margin > 1.0,
        margin,
    })
}
