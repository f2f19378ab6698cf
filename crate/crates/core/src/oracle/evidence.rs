//! Monte Carlo estimate of the empirical Bayes log-evidence for small
//! machines, with exact partition functions per draw.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::ml::{feature_moments, mean_log_likelihood, MAX_EXACT_SPINS};
use crate::error::{Error, Result};
use crate::model::{pair_count, BoltzmannMachine, PriorSpec};
use crate::moments::{Dataset, SufficientStats};
use crate::numeric::{log_sum_exp, LogSumExp};
use crate::seed;

/// Number of jackknife blocks.
pub const JACKKNIFE_BLOCKS: usize = 20;

/// Smallest accepted number of draws.
pub const MIN_DRAWS: usize = 100;

/// Where the couplings are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    /// Plain prior draws.
    Prior,
    /// Importance sampling from a mixture: with probability `1 - defensive`
    /// a Gaussian centred at the posterior mode of the couplings (covariance:
    /// the mode's inverse Hessian scaled by `inflation`), otherwise the prior.
    /// The prior component bounds the importance weights. The mode is found
    /// with a Gaussian prior of the same variance; the weights use the true
    /// prior.
    Posterior { inflation: f64, defensive: f64 },
}

impl Proposal {
    pub const DEFAULT_POSTERIOR: Proposal = Proposal::Posterior {
        inflation: 1.2,
        defensive: 0.1,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceEstimate {
    /// `(1 / nN) ln E_prior[prod_mu P(S^mu | H, J)]`.
    pub value: f64,
    /// Jackknife standard error of `value`.
    pub std_error: f64,
    pub draws: usize,
}

/// Evidence estimated from plain prior draws.
pub fn eb_likelihood_mc(
    data: &Dataset,
    prior: &PriorSpec,
    n_mc: usize,
    seed: u64,
) -> Result<EvidenceEstimate> {
    eb_likelihood_mc_with(data, prior, n_mc, seed, Proposal::Prior)
}

pub fn eb_likelihood_mc_with(
    data: &Dataset,
    prior: &PriorSpec,
    n_mc: usize,
    seed: u64,
    proposal: Proposal,
) -> Result<EvidenceEstimate> {
    let n = data.n();
    if n > MAX_EXACT_SPINS {
        return Err(Error::Capability {
            what: "Monte Carlo evidence",
            limit: MAX_EXACT_SPINS,
            got: n,
        });
    }
    if n_mc < MIN_DRAWS {
        return Err(Error::input(format!(
            "n_mc must be >= {MIN_DRAWS}, got {n_mc}"
        )));
    }
    let stats = SufficientStats::from_dataset(data);
    let scale = (n * data.len()) as f64;
    let big_n = data.len() as f64;

    if prior.gamma == 0.0 {
        let machine = BoltzmannMachine::independent(n, prior.field)?;
        let ll = big_n * mean_log_likelihood(&machine, &stats, machine.log_partition()?);
        return Ok(EvidenceEstimate {
            value: ll / scale,
            std_error: 0.0,
            draws: n_mc,
        });
    }

    let sampler = match proposal {
        Proposal::Prior => Sampler::Prior,
        Proposal::Posterior {
            inflation,
            defensive,
        } => {
            if !(inflation > 0.0) || !inflation.is_finite() {
                return Err(Error::input("proposal inflation must be finite and > 0"));
            }
            if !(defensive > 0.0 && defensive <= 1.0) {
                return Err(Error::input("defensive weight must lie in (0, 1]"));
            }
            Sampler::gaussian_at_mode(&stats, prior, inflation, defensive)?
        }
    };

    let sizes: Vec<usize> = (0..JACKKNIFE_BLOCKS)
        .map(|b| n_mc / JACKKNIFE_BLOCKS + usize::from(b < n_mc % JACKKNIFE_BLOCKS))
        .collect();
    let block_sums: Vec<f64> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &size)| -> Result<f64> {
            let mut rng = seed::rng_from(seed::child(seed, b as u64));
            let mut acc = LogSumExp::new();
            for draw in 0..size {
                let (machine, log_ratio) = sampler.draw(
                    n,
                    prior,
                    &mut rng,
                    seed::derive(seed, &[b as u64, draw as u64]),
                )?;
                let ll = big_n * mean_log_likelihood(&machine, &stats, machine.log_partition()?);
                acc.add(ll + log_ratio);
            }
            Ok(acc.value())
        })
        .collect::<Result<_>>()?;

    let value = log_sum_exp(&block_sums) - (n_mc as f64).ln();
    let leave_out: Vec<f64> = (0..JACKKNIFE_BLOCKS)
        .map(|b| {
            let rest: Vec<f64> = block_sums
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != b)
                .map(|(_, &v)| v)
                .collect();
            log_sum_exp(&rest) - ((n_mc - sizes[b]) as f64).ln()
        })
        .collect();
    let g = JACKKNIFE_BLOCKS as f64;
    let mean = leave_out.iter().sum::<f64>() / g;
    let var = (g - 1.0) / g * leave_out.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    Ok(EvidenceEstimate {
        value: value / scale,
        std_error: var.sqrt() / scale,
        draws: n_mc,
    })
}

enum Sampler {
    Prior,
    Gaussian {
        mode: DVector<f64>,
        /// Lower Cholesky factor of the proposal precision.
        chol: DMatrix<f64>,
        /// `ln det(precision) / 2 - d ln(2 pi) / 2`.
        log_norm: f64,
        defensive: f64,
    },
}

impl Sampler {
    fn gaussian_at_mode(
        stats: &SufficientStats,
        prior: &PriorSpec,
        inflation: f64,
        defensive: f64,
    ) -> Result<Self> {
        let n = stats.n;
        let dim = pair_count(n);
        let big_n = stats.n_samples as f64;
        let ridge = n as f64 / prior.gamma;
        let target = DVector::from_column_slice(&stats.pair_means);
        let mut j = DVector::<f64>::zeros(dim);
        let mut precision = DMatrix::<f64>::identity(dim, dim);
        for _ in 0..100 {
            let machine = BoltzmannMachine::new(n, prior.field, j.as_slice())?;
            let fm = feature_moments(&machine)?;
            let pair_mean = fm.mean.rows(1, dim);
            let grad = (&target - pair_mean) * big_n - &j * ridge;
            precision = fm.cov.view((1, 1), (dim, dim)) * big_n;
            for k in 0..dim {
                precision[(k, k)] += ridge;
            }
            let ch = precision.clone().cholesky().ok_or_else(|| {
                Error::Numerical("posterior precision is not positive definite".into())
            })?;
            let step = ch.solve(&grad);
            j += &step;
            if step.amax() < 1e-12 {
                break;
            }
        }
        precision /= inflation;
        let ch = precision.cholesky().ok_or_else(|| {
            Error::Numerical("posterior precision is not positive definite".into())
        })?;
        let chol = ch.l();
        let log_det_half: f64 = chol.diagonal().iter().map(|v| v.ln()).sum();
        Ok(Sampler::Gaussian {
            mode: j,
            chol,
            log_norm: log_det_half - 0.5 * dim as f64 * (2.0 * std::f64::consts::PI).ln(),
            defensive,
        })
    }

    /// One machine and its log importance ratio `ln prior - ln proposal`.
    fn draw(
        &self,
        n: usize,
        prior: &PriorSpec,
        rng: &mut seed::Rng,
        prior_seed: u64,
    ) -> Result<(BoltzmannMachine, f64)> {
        match self {
            Sampler::Prior => Ok((prior.sample(n, prior_seed)?, 0.0)),
            Sampler::Gaussian {
                mode,
                chol,
                log_norm,
                defensive,
            } => {
                let machine = if rng.random_bool(*defensive) {
                    prior.sample(n, prior_seed)?
                } else {
                    let z = DVector::<f64>::from_fn(mode.len(), |_, _| StandardNormal.sample(rng));
                    // precision = L L^T, so x = L^-T z has covariance precision^-1.
                    let x = chol
                        .tr_solve_upper_triangular(&z)
                        .ok_or_else(|| Error::Numerical("singular proposal factor".into()))?;
                    BoltzmannMachine::new(n, prior.field, (mode + x).as_slice())?
                };
                let j = DVector::from_vec(machine.pair_couplings());
                let z = chol.transpose() * (j - mode);
                let log_gauss = log_norm - 0.5 * z.norm_squared();
                let log_prior = prior.log_density(&machine)?;
                let log_q = log_sum_exp(&[
                    (1.0 - defensive).ln() + log_gauss,
                    defensive.ln() + log_prior,
                ]);
                Ok((machine, log_prior - log_q))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_data() -> Dataset {
        Dataset::new(
            4,
            vec![
                1, 1, -1, 1, -1, -1, -1, 1, 1, 1, 1, 1, -1, 1, -1, -1, 1, -1, 1, 1, 1, 1, -1, -1,
            ],
        )
        .unwrap()
    }

    #[test]
    fn deterministic_prior() {
        let data = Dataset::new(3, vec![1, -1, 1]).unwrap();
        let h = 0.3;
        let prior = PriorSpec::gaussian(0.0, h).unwrap();
        let est = eb_likelihood_mc(&data, &prior, 100, 7).unwrap();
        let m = 1.0 / 3.0;
        assert!((est.value - (h * m - (2.0 * h.cosh()).ln())).abs() < 1e-15);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn preconditions() {
        let prior = PriorSpec::gaussian(0.1, 0.0).unwrap();
        assert!(eb_likelihood_mc(&small_data(), &prior, 99, 1).is_err());
        let big = Dataset::new(13, vec![1; 13]).unwrap();
        assert!(matches!(
            eb_likelihood_mc(&big, &prior, 100, 1),
            Err(Error::Capability { .. })
        ));
    }

    #[test]
    fn seeds_agree() {
        let prior = PriorSpec::gaussian(0.5, 0.1).unwrap();
        let a = eb_likelihood_mc(&small_data(), &prior, 4000, 1).unwrap();
        let b = eb_likelihood_mc(&small_data(), &prior, 4000, 2).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() <= 3.0 * se, "{a:?} {b:?}");
    }

    #[test]
    fn proposals_agree() {
        for prior in [
            PriorSpec::gaussian(0.5, 0.1).unwrap(),
            PriorSpec::laplace(0.5, 0.1).unwrap(),
        ] {
            let a = eb_likelihood_mc(&small_data(), &prior, 20000, 3).unwrap();
            let b =
                eb_likelihood_mc_with(&small_data(), &prior, 4000, 4, Proposal::DEFAULT_POSTERIOR)
                    .unwrap();
            let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            assert!((a.value - b.value).abs() <= 3.0 * se, "{a:?} {b:?}");
        }
    }

    #[test]
    fn reproducible() {
        let prior = PriorSpec::gaussian(0.5, 0.0).unwrap();
        let a = eb_likelihood_mc_with(&small_data(), &prior, 200, 9, Proposal::DEFAULT_POSTERIOR)
            .unwrap();
        let b = eb_likelihood_mc_with(&small_data(), &prior, 200, 9, Proposal::DEFAULT_POSTERIOR)
            .unwrap();
        assert_eq!(a, b);
    }
}
