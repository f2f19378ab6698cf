//! Exact maximum likelihood for small machines with a shared field.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{for_each_state, pair_count, BoltzmannMachine};
use crate::moments::{Dataset, SufficientStats};

/// Largest machine the exact oracles (ML fit, MC evidence) accept.
pub const MAX_EXACT_SPINS: usize = 12;

const MAX_NEWTON_STEPS: usize = 200;

/// Gradient infinity-norm at which [`ml_fit_exact`] stops.
pub const ML_TOLERANCE: f64 = 1e-8;

/// Exact mean and covariance of the features `(sum_i S_i, S_i S_j for i < j)`,
/// together with `ln Z`.
pub(crate) struct FeatureMoments {
    pub log_z: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub(crate) fn feature_moments(machine: &BoltzmannMachine) -> Result<FeatureMoments> {
    let n = machine.n();
    let log_z = machine.log_partition()?;
    let dim = 1 + pair_count(n);
    let mut mean = DVector::zeros(dim);
    let mut second = DMatrix::zeros(dim, dim);
    let mut f = DVector::zeros(dim);
    for_each_state(machine, |s, e| {
        let w = (e - log_z).exp();
        f[0] = s.iter().sum();
        let mut k = 1;
        for i in 0..n {
            for j in i + 1..n {
                f[k] = s[i] * s[j];
                k += 1;
            }
        }
        mean.axpy(w, &f, 1.0);
        second.ger(w, &f, &f, 1.0);
    });
    let cov = second - &mean * mean.transpose();
    Ok(FeatureMoments { log_z, mean, cov })
}

/// Data averages of the features, matching [`feature_moments`].
pub(crate) fn data_features(stats: &SufficientStats) -> DVector<f64> {
    let mut f = DVector::zeros(1 + stats.pair_means.len());
    f[0] = stats.site_means.iter().sum();
    for (k, &d) in stats.pair_means.iter().enumerate() {
        f[k + 1] = d;
    }
    f
}

/// Per-sample log-likelihood `<E>_data - ln Z`.
pub(crate) fn mean_log_likelihood(
    machine: &BoltzmannMachine,
    stats: &SufficientStats,
    log_z: f64,
) -> f64 {
    let site: f64 = stats.site_means.iter().sum();
    let coupling: f64 = machine
        .pair_couplings()
        .iter()
        .zip(&stats.pair_means)
        .map(|(j, d)| j * d)
        .sum();
    machine.field() * site + coupling - log_z
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_EXACT_SPINS {
        return Err(Error::Capability {
            what: "exact maximum likelihood",
            limit: MAX_EXACT_SPINS,
            got: n,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlFit {
    pub field: f64,
    /// Couplings in pair order.
    pub couplings: Vec<f64>,
    pub iterations: usize,
    /// Final gradient infinity-norm.
    pub gradient_norm: f64,
}

impl MlFit {
    pub fn machine(&self, n: usize) -> Result<BoltzmannMachine> {
        BoltzmannMachine::new(n, self.field, &self.couplings)
    }
}

/// Maximize the exact log-likelihood over `(h, J)` by damped Newton steps.
/// The objective is concave, so the stationary point is the global optimum.
pub fn ml_fit_exact(data: &Dataset) -> Result<MlFit> {
    let n = data.n();
    check_size(n)?;
    let stats = SufficientStats::from_dataset(data);
    let target = data_features(&stats);
    let dim = target.len();
    let mut theta = DVector::<f64>::zeros(dim);
    let build = |t: &DVector<f64>| BoltzmannMachine::new(n, t[0], &t.as_slice()[1..]);

    for iter in 0..MAX_NEWTON_STEPS {
        let machine = build(&theta)?;
        let fm = feature_moments(&machine)?;
        let grad = &target - &fm.mean;
        let norm = grad.amax();
        if norm <= ML_TOLERANCE {
            return Ok(MlFit {
                field: theta[0],
                couplings: theta.as_slice()[1..].to_vec(),
                iterations: iter,
                gradient_norm: norm,
            });
        }
        let value = mean_log_likelihood(&machine, &stats, fm.log_z);
        // Small ridge keeps the system solvable when features are degenerate.
        let mut hess = fm.cov;
        for k in 0..dim {
            hess[(k, k)] += 1e-12;
        }
        let step = match hess.cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad.clone(),
        };
        let slope = grad.dot(&step);
        let mut t = 1.0;
        loop {
            let cand = &theta + &step * t;
            let m = build(&cand)?;
            let v = mean_log_likelihood(&m, &stats, m.log_partition()?);
            if v >= value + 1e-4 * t * slope || t < 1e-10 {
                theta = cand;
                break;
            }
            t *= 0.5;
        }
        if !theta.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    Err(Error::Numerical(format!(
        "exact ML did not converge within {MAX_NEWTON_STEPS} Newton steps"
    )))
}

/// Per-pair ML variance under a Gaussian prior, `gamma = n / #pairs * sum J^2`.
pub fn gamma_from_couplings(n: usize, couplings: &[f64]) -> f64 {
    n as f64 / couplings.len() as f64 * couplings.iter().map(|j| j * j).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_data_gives_zero() {
        // All four states of two spins once each: d_i = 0, d_ij = 0.
        let data = Dataset::new(2, vec![1, 1, 1, -1, -1, 1, -1, -1]).unwrap();
        let fit = ml_fit_exact(&data).unwrap();
        assert!(fit.field.abs() < 1e-12);
        assert!(fit.couplings[0].abs() < 1e-12);
    }

    #[test]
    fn matches_moments() {
        let data = Dataset::new(
            3,
            vec![1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, 1, 1, -1, 1, -1, 1, 1],
        )
        .unwrap();
        let fit = ml_fit_exact(&data).unwrap();
        let m = fit.machine(3).unwrap().exact_moments().unwrap();
        let st = SufficientStats::from_dataset(&data);
        let site: f64 = m.site.iter().sum();
        assert!((site - st.site_means.iter().sum::<f64>()).abs() < 1e-7);
        for (a, b) in m.pair.iter().zip(&st.pair_means) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn size_bound() {
        let data = Dataset::new(13, vec![1; 13]).unwrap();
        assert!(matches!(ml_fit_exact(&data), Err(Error::Capability { .. })));
    }

    #[test]
    fn feature_covariance_is_symmetric_psd() {
        let m = BoltzmannMachine::new(3, 0.2, &[0.3, -0.1, 0.5]).unwrap();
        let fm = feature_moments(&m).unwrap();
        assert!((&fm.cov - fm.cov.transpose()).amax() < 1e-14);
        assert!(fm.cov.symmetric_eigenvalues().min() > -1e-12);
    }

    #[test]
    fn gamma_formula() {
        assert_eq!(
            gamma_from_couplings(4, &[1.0, -1.0, 0.0, 0.0, 0.0, 0.0]),
            4.0 / 3.0
        );
    }
}
