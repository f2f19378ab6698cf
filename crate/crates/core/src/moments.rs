//! Observed spin data and the sufficient statistics the estimator consumes.
//!
//! All sample sums of `S_i` and `S_i S_j` are integers, so they are
//! accumulated exactly in integer arithmetic. Every statistic is then a single
//! rounded division of permutation-invariant integers, which makes relabeling
//! spins, reordering samples, and global spin flips leave `M`, `C1`, `C2` and
//! `Omega` bit-identical (up to the sign of `M`).

use crate::error::{Error, Result};
use crate::model::{check_permutation, pair_count, pairs, SpinConfiguration};

/// `N` observed configurations of `n` spins, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    n: usize,
    spins: Vec<i8>,
}

impl Dataset {
    /// `spins` holds `N` rows of length `n`.
    pub fn new(n: usize, spins: Vec<i8>) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("dataset needs n >= 2, got {n}")));
        }
        if spins.is_empty() || spins.len() % n != 0 {
            return Err(Error::input(format!(
                "dataset of {} entries is not a positive multiple of n = {n}",
                spins.len()
            )));
        }
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::input(format!(
                "sample {}, spin {} has value {}, expected -1 or +1",
                pos / n,
                pos % n,
                spins[pos]
            )));
        }
        Ok(Dataset { n, spins })
    }

    pub fn from_samples(samples: Vec<SpinConfiguration>) -> Result<Self> {
        let n = samples
            .first()
            .map(SpinConfiguration::len)
            .ok_or_else(|| Error::input("dataset needs at least one sample"))?;
        let mut spins = Vec::with_capacity(n * samples.len());
        for (mu, s) in samples.into_iter().enumerate() {
            if s.len() != n {
                return Err(Error::input(format!(
                    "sample {mu} has {} spins, expected {n}",
                    s.len()
                )));
            }
            spins.extend(s.into_inner());
        }
        Dataset::new(n, spins)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.spins.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn sample(&self, mu: usize) -> &[i8] {
        &self.spins[mu * self.n..(mu + 1) * self.n]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[i8]> {
        self.spins.chunks_exact(self.n)
    }

    pub fn as_flat(&self) -> &[i8] {
        &self.spins
    }

    /// Every spin of every sample negated.
    pub fn flipped(&self) -> Self {
        Dataset {
            n: self.n,
            spins: self.spins.iter().map(|&s| -s).collect(),
        }
    }

    /// Relabel spins: new spin `k` is old spin `perm[k]`.
    pub fn permute_spins(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let spins = self
            .samples()
            .flat_map(|row| perm.iter().map(move |&p| row[p]))
            .collect();
        Ok(Dataset { n: self.n, spins })
    }

    /// Reorder samples: new sample `k` is old sample `order[k]`.
    pub fn reorder_samples(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.len())?;
        let spins = order
            .iter()
            .flat_map(|&mu| self.sample(mu).iter().copied())
            .collect();
        Ok(Dataset { n: self.n, spins })
    }
}

/// Everything the closed-form estimator needs from a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub n: usize,
    /// Number of samples `N`.
    pub n_samples: usize,
    /// Mean magnetization `M = (1/n) sum_i d_i`.
    pub magnetization: f64,
    /// `d_i`, per-site sample means.
    pub site_means: Vec<f64>,
    /// `d_ij`, per-pair sample correlations in `pair_index` order.
    pub pair_means: Vec<f64>,
    /// Mean of `d_ij` over pairs.
    pub c1: f64,
    /// Mean of `d_ij^2` over pairs.
    pub c2: f64,
    /// `omega_i`: per-site mean correlation minus `c1`.
    pub omegas: Vec<f64>,
    /// Mean of `omega_i^2`.
    pub omega: f64,
    pub max_abs_pair_mean: f64,
}

impl SufficientStats {
    pub fn from_dataset(data: &Dataset) -> Self {
        let n = data.n();
        let big_n = data.len();
        let mut site_sums = vec![0i64; n];
        let mut pair_sums = vec![0i32; pair_count(n)];
        for row in data.samples() {
            let mut k = 0;
            for i in 0..n {
                let si = row[i];
                site_sums[i] += si as i64;
                for &sj in &row[i + 1..] {
                    pair_sums[k] += (si * sj) as i32;
                    k += 1;
                }
            }
        }

        let nf = n as f64;
        let big_nf = big_n as f64;
        let pair_total: i64 = pair_sums.iter().map(|&c| c as i64).sum();
        let pair_sq_total: i128 = pair_sums.iter().map(|&c| (c as i128) * (c as i128)).sum();

        let mut row_sums = vec![0i64; n];
        for ((i, j), &c) in pairs(n).zip(&pair_sums) {
            row_sums[i] += c as i64;
            row_sums[j] += c as i64;
        }
        // sum_i r_i = 2 * pair_total
        let r_total = 2 * pair_total;
        let r_sq_total: i128 = row_sums.iter().map(|&r| (r as i128) * (r as i128)).sum();

        let site_total: i64 = site_sums.iter().sum();
        let norm_pairs = nf * (nf - 1.0) * big_nf;
        let omega_den = nf * nf * (nf - 1.0) * (nf - 1.0) * big_nf * big_nf;
        let omega_num = n as i128 * r_sq_total - (r_total as i128) * (r_total as i128);

        SufficientStats {
            n,
            n_samples: big_n,
            magnetization: site_total as f64 / (nf * big_nf),
            site_means: site_sums.iter().map(|&s| s as f64 / big_nf).collect(),
            pair_means: pair_sums.iter().map(|&c| c as f64 / big_nf).collect(),
            c1: 2.0 * pair_total as f64 / norm_pairs,
            c2: 2.0 * pair_sq_total as f64 / (norm_pairs * big_nf),
            omegas: row_sums
                .iter()
                .map(|&r| (n as i64 * r - r_total) as f64 / (nf * (nf - 1.0) * big_nf))
                .collect(),
            omega: omega_num as f64 / omega_den,
            max_abs_pair_mean: pair_sums
                .iter()
                .map(|&c| c.unsigned_abs())
                .max()
                .unwrap_or(0) as f64
                / big_nf,
        }
    }

    /// Overwrite the aggregate statistics directly. Per-site and per-pair
    /// vectors are left empty; only the closed-form estimator may consume the
    /// result.
    pub fn from_aggregates(
        n: usize,
        n_samples: usize,
        magnetization: f64,
        c1: f64,
        c2: f64,
        omega: f64,
    ) -> Result<Self> {
        if n < 2 || n_samples < 1 {
            return Err(Error::input("aggregates need n >= 2 and N >= 1"));
        }
        if !(magnetization.abs() <= 1.0) || !(c1.abs() <= 1.0) || !(0.0..=1.0).contains(&c2) {
            return Err(Error::input("aggregate statistics out of range"));
        }
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::input("omega must be finite and >= 0"));
        }
        Ok(SufficientStats {
            n,
            n_samples,
            magnetization,
            site_means: Vec::new(),
            pair_means: Vec::new(),
            c1,
            c2,
            omegas: Vec::new(),
            omega,
            max_abs_pair_mean: 1.0,
        })
    }
}
