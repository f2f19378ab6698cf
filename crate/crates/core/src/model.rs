//! Fully-connected Boltzmann machine, its priors, and exact evaluation for
//! small systems.
//!
//! The machine assigns `P(S) = exp(h * sum_i S_i + sum_{i<j} J_ij S_i S_j) / Z`.
//! We work with the positive exponent throughout; there is no separate
//! "energy" with a flipped sign.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, Open01};

use crate::error::{Error, Result};
use crate::numeric::LogSumExp;
use crate::seed;

/// Largest `n` accepted by [`BoltzmannMachine::log_partition`].
pub const MAX_PARTITION_SPINS: usize = 20;
/// Largest `n` accepted by [`BoltzmannMachine::exact_moments`].
pub const MAX_MOMENT_SPINS: usize = 16;

/// Number of unordered pairs among `n` spins.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of pair `(i, j)`, `i < j`, in row-major upper-triangular order
/// `(0,1), (0,2), ..., (0,n-1), (1,2), ...`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Iterator over `(i, j)` with `i < j` in [`pair_index`] order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// A configuration of `n >= 2` Ising spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.len() < 2 {
            return Err(Error::input(format!(
                "spin configuration needs n >= 2, got {}",
                spins.len()
            )));
        }
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::input(format!(
                "spin {} has value {}, expected -1 or +1",
                pos, spins[pos]
            )));
        }
        Ok(SpinConfiguration(spins))
    }

    pub(crate) fn from_vec_unchecked(spins: Vec<i8>) -> Self {
        SpinConfiguration(spins)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }

    /// Every spin negated.
    pub fn flipped(&self) -> Self {
        SpinConfiguration(self.0.iter().map(|&s| -s).collect())
    }
}

/// Uniform field `h` plus symmetric couplings `J_ij`.
///
/// Couplings are stored as a dense symmetric `n x n` matrix with a zero
/// diagonal so the sampler can read whole rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannMachine {
    n: usize,
    field: f64,
    couplings: Vec<f64>,
}

impl BoltzmannMachine {
    /// Build from pair couplings listed in [`pair_index`] order.
    pub fn new(n: usize, field: f64, pair_couplings: &[f64]) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("machine needs n >= 2, got {n}")));
        }
        if pair_couplings.len() != pair_count(n) {
            return Err(Error::input(format!(
                "expected {} couplings for n = {n}, got {}",
                pair_count(n),
                pair_couplings.len()
            )));
        }
        if !field.is_finite() || pair_couplings.iter().any(|j| !j.is_finite()) {
            return Err(Error::input("machine parameters must be finite"));
        }
        let mut couplings = vec![0.0; n * n];
        for ((i, j), &v) in pairs(n).zip(pair_couplings) {
            couplings[i * n + j] = v;
            couplings[j * n + i] = v;
        }
        Ok(BoltzmannMachine {
            n,
            field,
            couplings,
        })
    }

    /// A machine with all couplings zero.
    pub fn independent(n: usize, field: f64) -> Result<Self> {
        Self::new(n, field, &vec![0.0; pair_count(n)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    /// Row `i` of the coupling matrix (`row[i] == 0`).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.couplings[i * self.n..(i + 1) * self.n]
    }

    /// Couplings in [`pair_index`] order.
    pub fn pair_couplings(&self) -> Vec<f64> {
        pairs(self.n).map(|(i, j)| self.coupling(i, j)).collect()
    }

    /// Relabel spins: new spin `k` is old spin `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let js: Vec<f64> = pairs(self.n)
            .map(|(i, j)| self.coupling(perm[i], perm[j]))
            .collect();
        Self::new(self.n, self.field, &js)
    }

    /// `h * sum_i s_i + sum_{i<j} J_ij s_i s_j`.
    pub fn exponent(&self, s: &SpinConfiguration) -> Result<f64> {
        if s.len() != self.n {
            return Err(Error::input(format!(
                "configuration has {} spins, machine has {}",
                s.len(),
                self.n
            )));
        }
        Ok(self.exponent_unchecked(s.as_slice()))
    }

    pub(crate) fn exponent_unchecked(&self, s: &[i8]) -> f64 {
        let n = self.n;
        let mut magnet = 0i64;
        let mut coupling = 0.0;
        for i in 0..n {
            let si = s[i] as f64;
            magnet += s[i] as i64;
            let row = self.row(i);
            let mut acc = 0.0;
            for j in i + 1..n {
                acc += row[j] * s[j] as f64;
            }
            coupling += si * acc;
        }
        self.field * magnet as f64 + coupling
    }

    /// Exact `ln Z` by enumerating all `2^n` states.
    pub fn log_partition(&self) -> Result<f64> {
        if self.n > MAX_PARTITION_SPINS {
            return Err(Error::Capability {
                what: "exact log-partition",
                limit: MAX_PARTITION_SPINS,
                got: self.n,
            });
        }
        let mut acc = LogSumExp::new();
        for_each_state(self, |_, e| acc.add(e));
        Ok(acc.value())
    }

    /// Exact `<S_i>` and `<S_i S_j>` (pairs in [`pair_index`] order).
    pub fn exact_moments(&self) -> Result<ExactMoments> {
        if self.n > MAX_MOMENT_SPINS {
            return Err(Error::Capability {
                what: "exact moments",
                limit: MAX_MOMENT_SPINS,
                got: self.n,
            });
        }
        let log_z = self.log_partition()?;
        let n = self.n;
        let mut site = vec![0.0; n];
        let mut pair = vec![0.0; pair_count(n)];
        for_each_state(self, |s, e| {
            let w = (e - log_z).exp();
            let mut k = 0;
            for i in 0..n {
                site[i] += w * s[i];
                let wi = w * s[i];
                for &sj in &s[i + 1..] {
                    pair[k] += wi * sj;
                    k += 1;
                }
            }
        });
        Ok(ExactMoments { site, pair })
    }
}

/// Exact first and second moments of a machine.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoments {
    pub site: Vec<f64>,
    pub pair: Vec<f64>,
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::input("permutation length does not match n"));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::input("not a permutation"));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Visit all `2^n` states in Gray-code order, passing spins (as `f64`) and the
/// exponent. Each step flips one spin and updates the exponent in O(n).
pub(crate) fn for_each_state(machine: &BoltzmannMachine, mut visit: impl FnMut(&[f64], f64)) {
    let n = machine.n;
    let h = machine.field;
    let mut s = vec![-1.0f64; n];
    // local[i] = sum_j J_ij s_j
    let mut local: Vec<f64> = (0..n)
        .map(|i| -machine.row(i).iter().sum::<f64>())
        .collect();
    let mut e = {
        let coupling: f64 = pairs(n).map(|(i, j)| machine.coupling(i, j)).sum();
        -h * n as f64 + coupling
    };
    visit(&s, e);
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        let old = s[i];
        e -= 2.0 * old * (h + local[i]);
        s[i] = -old;
        let delta = -2.0 * old;
        for (l, &jil) in local.iter_mut().zip(machine.row(i)) {
            *l += jil * delta;
        }
        visit(&s, e);
    }
}

/// Prior family for the couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorFamily {
    Gaussian,
    Laplace,
}

impl fmt::Display for PriorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorFamily::Gaussian => "gauss",
            PriorFamily::Laplace => "laplace",
        })
    }
}

impl FromStr for PriorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gauss" | "gaussian" => Ok(PriorFamily::Gaussian),
            "laplace" => Ok(PriorFamily::Laplace),
            other => Err(Error::input(format!(
                "unknown prior '{other}' (expected gauss or laplace)"
            ))),
        }
    }
}

/// Hyperparameters: coupling prior with `Var[J_ij] = gamma / n`, and a delta
/// prior pinning the field at `field`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub family: PriorFamily,
    pub gamma: f64,
    pub field: f64,
}

impl PriorSpec {
    pub fn new(family: PriorFamily, gamma: f64, field: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::input(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        if !field.is_finite() {
            return Err(Error::input("field hyperparameter must be finite"));
        }
        Ok(PriorSpec {
            family,
            gamma,
            field,
        })
    }

    pub fn gaussian(gamma: f64, field: f64) -> Result<Self> {
        Self::new(PriorFamily::Gaussian, gamma, field)
    }

    pub fn laplace(gamma: f64, field: f64) -> Result<Self> {
        Self::new(PriorFamily::Laplace, gamma, field)
    }

    /// Draw a machine: `h = field` exactly, couplings i.i.d. from the prior.
    /// Laplace draws use the inverse CDF with rate `sqrt(2n / gamma)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<BoltzmannMachine> {
        if n < 2 {
            return Err(Error::input(format!("machine needs n >= 2, got {n}")));
        }
        let count = pair_count(n);
        if self.gamma == 0.0 {
            return BoltzmannMachine::new(n, self.field, &vec![0.0; count]);
        }
        let mut rng = seed::rng_from(seed);
        let js: Vec<f64> = match self.family {
            PriorFamily::Gaussian => {
                let normal = Normal::new(0.0, (self.gamma / n as f64).sqrt())
                    .map_err(|e| Error::input(e.to_string()))?;
                (0..count).map(|_| normal.sample(&mut rng)).collect()
            }
            PriorFamily::Laplace => {
                let rate = (2.0 * n as f64 / self.gamma).sqrt();
                (0..count)
                    .map(|_| {
                        let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
                        -u.signum() * (1.0 - 2.0 * u.abs()).ln() / rate
                    })
                    .collect()
            }
        };
        BoltzmannMachine::new(n, self.field, &js)
    }

    /// Sum of per-pair log densities. The delta factor for `h` is excluded,
    /// so the machine's field must equal the prior's exactly.
    pub fn log_density(&self, machine: &BoltzmannMachine) -> Result<f64> {
        if self.gamma <= 0.0 {
            return Err(Error::input("log density requires gamma > 0"));
        }
        if machine.field() != self.field {
            return Err(Error::input(format!(
                "field {} is outside the delta prior's support ({})",
                machine.field(),
                self.field
            )));
        }
        let n = machine.n() as f64;
        let g = self.gamma;
        let total = match self.family {
            PriorFamily::Gaussian => {
                let norm = 0.5 * (n / (2.0 * std::f64::consts::PI * g)).ln();
                pairs(machine.n())
                    .map(|(i, j)| {
                        let v = machine.coupling(i, j);
                        norm - n * v * v / (2.0 * g)
                    })
                    .sum()
            }
            PriorFamily::Laplace => {
                let norm = 0.5 * (n / (2.0 * g)).ln();
                let rate = (2.0 * n / g).sqrt();
                pairs(machine.n())
                    .map(|(i, j)| norm - rate * machine.coupling(i, j).abs())
                    .sum()
            }
        };
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::log_sum_exp;
    use proptest::prelude::*;

    fn random_machine(n: usize, seed: u64) -> BoltzmannMachine {
        let mut m = PriorSpec::gaussian(1.0, 0.0)
            .unwrap()
            .sample(n, seed)
            .unwrap();
        m.field = 0.3;
        m
    }

    /// All states in plain binary order, most significant spin last.
    fn all_states(n: usize) -> Vec<Vec<i8>> {
        (0..1u32 << n)
            .map(|k| {
                (0..n)
                    .map(|i| if k >> i & 1 == 1 { 1 } else { -1 })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn pair_index_matches_iteration_order() {
        for (k, (i, j)) in pairs(7).enumerate() {
            assert_eq!(pair_index(7, i, j), k);
        }
        assert_eq!(pairs(7).count(), pair_count(7));
    }

    #[test]
    fn spin_configuration_validation() {
        assert!(SpinConfiguration::new(vec![1, -1, 1]).is_ok());
        assert!(SpinConfiguration::new(vec![1]).is_err());
        assert!(SpinConfiguration::new(vec![1, 0, -1]).is_err());
    }

    #[test]
    fn exponent_examples() {
        let zero = BoltzmannMachine::independent(4, 0.0).unwrap();
        let s = SpinConfiguration::new(vec![1, -1, -1, 1]).unwrap();
        assert_eq!(zero.exponent(&s).unwrap(), 0.0);

        let m = BoltzmannMachine::new(2, 1.0, &[0.5]).unwrap();
        let up = SpinConfiguration::new(vec![1, 1]).unwrap();
        assert_eq!(m.exponent(&up).unwrap(), 2.5);

        let short = SpinConfiguration::new(vec![1, 1]).unwrap();
        assert!(zero.exponent(&short).is_err());
    }

    #[test]
    fn exponent_even_odd_split() {
        let m = random_machine(3, 11);
        for s in all_states(3) {
            let s = SpinConfiguration::new(s).unwrap();
            let coupling: f64 = pairs(3)
                .map(|(i, j)| m.coupling(i, j) * (s.as_slice()[i] * s.as_slice()[j]) as f64)
                .sum();
            let sum = m.exponent(&s).unwrap() + m.exponent(&s.flipped()).unwrap();
            assert!((sum - 2.0 * coupling).abs() < 1e-15);
        }
    }

    #[test]
    fn log_partition_uniform() {
        let m = BoltzmannMachine::independent(5, 0.0).unwrap();
        let lz = m.log_partition().unwrap();
        assert!((lz - 5.0 * 2f64.ln()).abs() <= 1e-12 * lz);
    }

    #[test]
    fn log_partition_two_spins() {
        let (h, j) = (0.7, -0.4);
        let m = BoltzmannMachine::new(2, h, &[j]).unwrap();
        let expect = (2.0 * j.exp() * (2.0 * h).cosh() + 2.0 * (-j).exp()).ln();
        assert!((m.log_partition().unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn log_partition_matches_reversed_enumeration() {
        let m = random_machine(10, 5);
        let exps: Vec<f64> = all_states(10)
            .into_iter()
            .rev()
            .map(|s| m.exponent_unchecked(&s))
            .collect();
        let oracle = log_sum_exp(&exps);
        assert!((m.log_partition().unwrap() - oracle).abs() < 1e-11);
    }

    #[test]
    fn log_partition_capability_bound() {
        let m = BoltzmannMachine::independent(21, 0.0).unwrap();
        assert!(matches!(m.log_partition(), Err(Error::Capability { .. })));
        let m = BoltzmannMachine::independent(17, 0.0).unwrap();
        assert!(matches!(m.exact_moments(), Err(Error::Capability { .. })));
    }

    #[test]
    fn exact_moments_examples() {
        let zero = BoltzmannMachine::independent(4, 0.0).unwrap();
        let mo = zero.exact_moments().unwrap();
        assert!(mo.site.iter().chain(&mo.pair).all(|v| v.abs() < 1e-15));

        let j = 0.8;
        let two = BoltzmannMachine::new(2, 0.0, &[j]).unwrap();
        let mo = two.exact_moments().unwrap();
        let expect = (j.exp() - (-j).exp()) / (j.exp() + (-j).exp());
        assert!((mo.pair[0] - expect).abs() < 1e-15);
        assert!((mo.pair[0] - j.tanh()).abs() < 1e-15);

        let h = -0.45;
        let ind = BoltzmannMachine::independent(5, h).unwrap();
        let mo = ind.exact_moments().unwrap();
        for &v in &mo.site {
            assert!((v - h.tanh()).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_moments_zero_field_symmetry_and_bounds() {
        let mut m = random_machine(8, 3);
        m.field = 0.0;
        let mo = m.exact_moments().unwrap();
        for &v in &mo.site {
            assert!(v.abs() < 1e-12);
        }
        let mut m = random_machine(8, 4);
        m.field = 0.9;
        let mo = m.exact_moments().unwrap();
        for ((i, j), &p) in pairs(8).zip(&mo.pair) {
            assert!((-1.0..=1.0 + 1e-12).contains(&p));
            assert!(p >= mo.site[i] * mo.site[j] - 2.0);
        }
    }

    #[test]
    fn sample_degenerate_prior() {
        let p = PriorSpec::gaussian(0.0, 0.25).unwrap();
        let m = p.sample(6, 1).unwrap();
        assert_eq!(m.field(), 0.25);
        assert!(m.pair_couplings().iter().all(|&v| v == 0.0));
        assert!(PriorSpec::gaussian(-1.0, 0.0).is_err());
    }

    fn variance_and_kurtosis(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        (mean, m2, m4 / (m2 * m2) - 3.0)
    }

    fn draws(prior: PriorSpec, n: usize, want: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(want);
        let mut seed = 0;
        while out.len() < want {
            out.extend(prior.sample(n, seed).unwrap().pair_couplings());
            seed += 1;
        }
        out.truncate(want);
        out
    }

    #[test]
    fn gaussian_prior_variance() {
        let xs = draws(PriorSpec::gaussian(1.0, 0.0).unwrap(), 100, 100_000);
        let (_, var, _) = variance_and_kurtosis(&xs);
        let sigma2 = 0.01;
        // Var of the sample variance for a normal: 2 sigma^4 / (N - 1).
        let se = (2.0 * sigma2 * sigma2 / (xs.len() as f64 - 1.0)).sqrt();
        assert!((var - sigma2).abs() < 5.0 * se, "var {var}");
    }

    #[test]
    fn laplace_prior_variance_and_kurtosis() {
        let xs = draws(PriorSpec::laplace(1.0, 0.0).unwrap(), 100, 100_000);
        let (_, var, kurt) = variance_and_kurtosis(&xs);
        let sigma2 = 0.01;
        let count = xs.len() as f64;
        // Laplace: mu4 = 6 sigma^4, so Var(s^2) = (mu4 - sigma^4)/N = 5 sigma^4 / N.
        let se_var = (5.0 * sigma2 * sigma2 / count).sqrt();
        assert!((var - sigma2).abs() < 5.0 * se_var, "var {var}");
        // Excess kurtosis 3; its standard error comes from the spread of ten
        // sub-batch estimates.
        let batch_k: Vec<f64> = xs
            .chunks(10_000)
            .map(|c| variance_and_kurtosis(c).2)
            .collect();
        let (_, bvar, _) = variance_and_kurtosis(&batch_k);
        let se_k = (bvar / batch_k.len() as f64).sqrt();
        assert!((kurt - 3.0).abs() < 5.0 * se_k, "kurtosis {kurt} se {se_k}");
    }

    #[test]
    fn sampling_is_pure_in_seed() {
        let p = PriorSpec::laplace(0.5, 0.1).unwrap();
        assert_eq!(p.sample(9, 77).unwrap(), p.sample(9, 77).unwrap());
        assert_ne!(p.sample(9, 77).unwrap(), p.sample(9, 78).unwrap());
    }

    #[test]
    fn log_density_examples() {
        let n = 4usize;
        let pairs_n = pair_count(n) as f64;
        let g = 0.7;
        let zero = BoltzmannMachine::independent(n, 0.2).unwrap();
        let gauss = PriorSpec::gaussian(g, 0.2).unwrap();
        let lap = PriorSpec::laplace(g, 0.2).unwrap();
        let pi = std::f64::consts::PI;
        let expect_g = pairs_n * 0.5 * (n as f64 / (2.0 * pi * g)).ln();
        let expect_l = pairs_n * 0.5 * (n as f64 / (2.0 * g)).ln();
        assert!((gauss.log_density(&zero).unwrap() - expect_g).abs() < 1e-13);
        assert!((lap.log_density(&zero).unwrap() - expect_l).abs() < 1e-13);

        // n = 3, gamma = 1, J = (0.1, 0.2, 0.3):
        // 3 * 0.5 * ln(3 / 2pi) - 3 * (0.01 + 0.04 + 0.09) / 2
        let m = BoltzmannMachine::new(3, 0.0, &[0.1, 0.2, 0.3]).unwrap();
        let p = PriorSpec::gaussian(1.0, 0.0).unwrap();
        let hand = 1.5 * (3.0 / (2.0 * pi)).ln() - 0.21;
        assert!((p.log_density(&m).unwrap() - hand).abs() < 1e-14);

        assert!(PriorSpec::gaussian(0.0, 0.0)
            .unwrap()
            .log_density(&m)
            .is_err());
        assert!(PriorSpec::gaussian(1.0, 0.5)
            .unwrap()
            .log_density(&m)
            .is_err());
    }

    proptest! {
        #[test]
        fn log_partition_permutation_invariant(seed in 0u64..1000, shift in 1usize..6) {
            let m = random_machine(6, seed);
            let perm: Vec<usize> = (0..6).map(|k| (k + shift) % 6).collect();
            let p = m.permuted(&perm).unwrap();
            let (a, b) = (m.log_partition().unwrap(), p.log_partition().unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
