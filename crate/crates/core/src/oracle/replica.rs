//! Brute-force checks of the replica and Plefka algebra on tiny systems.
//!
//! Everything here enumerates all `2^(n tau)` states of a replicated system
//! of `n` sites and `tau` replicas, so it is exact up to rounding and shares
//! no code path with the closed-form coefficients it verifies.

use crate::error::{Error, Result};
use crate::estimator::{mean_field_entropy, phi1_general, phi2_general, PlefkaContext};
use crate::model::pairs;
use crate::moments::{Dataset, SufficientStats};
use crate::numeric::{bisect, LogSumExp};

/// Largest `n * tau` the oracles will enumerate.
pub const MAX_REPLICATED_SPINS: usize = 15;

/// Data-derived inputs of a replicated system with `tau` replicas.
#[derive(Debug, Clone)]
pub struct ReplicatedSystem {
    stats: SufficientStats,
    tau: usize,
}

impl ReplicatedSystem {
    pub fn new(data: &Dataset, tau: usize) -> Result<Self> {
        if tau == 0 {
            return Err(Error::input("replica count must be >= 1"));
        }
        if data.n() * tau > MAX_REPLICATED_SPINS {
            return Err(Error::Capability {
                what: "replicated enumeration (n * tau)",
                limit: MAX_REPLICATED_SPINS,
                got: data.n() * tau,
            });
        }
        Ok(ReplicatedSystem {
            stats: SufficientStats::from_dataset(data),
            tau,
        })
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    /// Replica parameter `x = tau / N`.
    pub fn x(&self) -> f64 {
        self.tau as f64 / self.stats.n_samples as f64
    }

    pub fn context(&self) -> PlefkaContext {
        PlefkaContext::new(&self.stats, self.x())
    }

    /// Visit every replicated state; spin `(i, a)` is at `s[i * tau + a]`.
    fn for_each_state(&self, mut visit: impl FnMut(&[f64])) {
        let total = self.stats.n * self.tau;
        let mut s = vec![0.0; total];
        for k in 0u32..(1u32 << total) {
            for (b, v) in s.iter_mut().enumerate() {
                *v = if k >> b & 1 == 1 { 1.0 } else { -1.0 };
            }
            visit(&s);
        }
    }

    /// Sum over replicas of `S_i^a S_j^a`.
    fn replica_overlap(&self, s: &[f64], i: usize, j: usize) -> f64 {
        let t = self.tau;
        (0..t).map(|a| s[i * t + a] * s[j * t + a]).sum()
    }

    /// `sum_{a<b} S_i^a S_j^a S_i^b S_j^b`.
    fn replica_pair_product(&self, s: &[f64], i: usize, j: usize) -> f64 {
        let t = self.tau;
        let mut acc = 0.0;
        for a in 0..t {
            let qa = s[i * t + a] * s[j * t + a];
            for b in a + 1..t {
                acc += qa * s[i * t + b] * s[j * t + b];
            }
        }
        acc
    }

    /// `E_int`, the coupling part of the replicated Hamiltonian (per unit
    /// `gamma`).
    fn interaction(&self, s: &[f64]) -> f64 {
        let n = self.stats.n as f64;
        let big_n = self.stats.n_samples as f64;
        let mut e = 0.0;
        for ((i, j), &d) in pairs(self.stats.n).zip(&self.stats.pair_means) {
            e -= big_n / n * d * self.replica_overlap(s, i, j);
            e -= self.replica_pair_product(s, i, j) / n;
        }
        e
    }

    /// Georges's operator at `gamma = 0` for magnetization `m`.
    fn georges_operator(&self, s: &[f64], m: f64) -> f64 {
        let n = self.stats.n as f64;
        let big_n = self.stats.n_samples as f64;
        let t = self.tau;
        let mut first = 0.0;
        for (i, &w) in self.stats.omegas.iter().enumerate() {
            let centered: f64 = (0..t).map(|a| s[i * t + a] - m).sum();
            first += w * m * centered;
        }
        first *= (n - 1.0) * big_n / n;

        let mut second = 0.0;
        let mut third = 0.0;
        let m2 = m * m;
        for ((i, j), &d) in pairs(self.stats.n).zip(&self.stats.pair_means) {
            let coef = d + (t as f64 - 1.0) * m2 / big_n;
            let cov: f64 = (0..t)
                .map(|a| (s[i * t + a] - m) * (s[j * t + a] - m))
                .sum();
            second += coef * cov;
            for a in 0..t {
                let qa = s[i * t + a] * s[j * t + a] - m2;
                for b in a + 1..t {
                    third += qa * (s[i * t + b] * s[j * t + b] - m2);
                }
            }
        }
        first + big_n / n * second + third / n
    }
}

/// Both sides of the Gaussian-prior replica identity, in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiCheck {
    /// Replicated sum with the Gaussian coupling integral done per pair.
    pub lhs: f64,
    /// Prefactor minus the replicated free energy.
    pub rhs: f64,
    pub gap: f64,
}

/// Compare `ln Psi_x` computed two ways for a Gaussian coupling prior with
/// `x = tau / N`.
pub fn psi_identity_check(data: &Dataset, field: f64, gamma: f64, tau: usize) -> Result<PsiCheck> {
    let sys = ReplicatedSystem::new(data, tau)?;
    let st = sys.stats();
    let n = st.n as f64;
    let big_n = st.n_samples as f64;
    let x = sys.x();
    let data_field = field * big_n * st.site_means.iter().sum::<f64>();

    // E_J[exp(J A)] = exp(gamma A^2 / (2n)) for J ~ N(0, gamma / n).
    let mut lhs = LogSumExp::new();
    let mut free = LogSumExp::new();
    sys.for_each_state(|s| {
        let magnet: f64 = s.iter().sum();
        let mut quad = 0.0;
        for ((i, j), &d) in pairs(st.n).zip(&st.pair_means) {
            let a = sys.replica_overlap(s, i, j) + big_n * d;
            quad += a * a;
        }
        lhs.add(field * magnet + data_field + gamma * quad / (2.0 * n));
        free.add(field * magnet - gamma * sys.interaction(s));
    });
    let lhs = lhs.value();
    let rhs = n * big_n * field * st.magnetization
        + gamma * (n - 1.0) * big_n * big_n / 4.0 * (st.c2 + x / big_n)
        + free.value();
    Ok(PsiCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Enumerated moments of the interaction energy and Georges's operator under
/// the independent-spin measure with `<S> = m`, next to the values predicted
/// by the closed-form coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeorgesCheck {
    /// `<E_int>_0` by enumeration.
    pub interaction_mean: f64,
    /// `n N phi1_x(m)`.
    pub interaction_formula: f64,
    /// `<U_x(0)>_0`, zero by construction.
    pub operator_mean: f64,
    /// `<U_x(0)^2>_0` by enumeration.
    pub operator_square: f64,
    /// `-2 n N phi2_x(m)`.
    pub operator_square_formula: f64,
}

impl GeorgesCheck {
    pub fn first_order_gap(&self) -> f64 {
        (self.interaction_mean - self.interaction_formula).abs()
    }

    pub fn second_order_gap(&self) -> f64 {
        (self.operator_square - self.operator_square_formula).abs()
    }
}

pub fn georges_check(data: &Dataset, m: f64, tau: usize) -> Result<GeorgesCheck> {
    georges_check_with(data, m, tau, 0.0)
}

/// As [`georges_check`], with the formula side of the second-order identity
/// scaled by `1 + perturbation` (negative-control fixture).
pub fn georges_check_with(
    data: &Dataset,
    m: f64,
    tau: usize,
    perturbation: f64,
) -> Result<GeorgesCheck> {
    if !(m.abs() < 1.0) {
        return Err(Error::input(format!(
            "magnetization {m} must satisfy |m| < 1"
        )));
    }
    let sys = ReplicatedSystem::new(data, tau)?;
    let n = sys.stats().n as f64;
    let big_n = sys.stats().n_samples as f64;
    let (up, down) = (0.5 * (1.0 + m), 0.5 * (1.0 - m));
    let mut e_mean = 0.0;
    let mut u_mean = 0.0;
    let mut u_sq = 0.0;
    sys.for_each_state(|s| {
        let w: f64 = s.iter().map(|&v| if v > 0.0 { up } else { down }).product();
        let u = sys.georges_operator(s, m);
        e_mean += w * sys.interaction(s);
        u_mean += w * u;
        u_sq += w * u * u;
    });
    let ctx = sys.context();
    Ok(GeorgesCheck {
        interaction_mean: e_mean,
        interaction_formula: n * big_n * phi1_general(m, &ctx),
        operator_mean: u_mean,
        operator_square: u_sq,
        operator_square_formula: -2.0 * n * big_n * phi2_general(m, &ctx) * (1.0 + perturbation),
    })
}

/// Replicated Gibbs free energy `G_x(m, H = 0, gamma)` by exact enumeration
/// and a one-dimensional Legendre transform in the conjugate field.
pub fn gibbs_free_energy(data: &Dataset, m: f64, gamma: f64, tau: usize) -> Result<f64> {
    if !(m.abs() < 1.0) {
        return Err(Error::input(format!(
            "magnetization {m} must satisfy |m| < 1"
        )));
    }
    let sys = ReplicatedSystem::new(data, tau)?;
    let mut magnets = Vec::new();
    let mut energies = Vec::new();
    sys.for_each_state(|s| {
        magnets.push(s.iter().sum::<f64>());
        energies.push(sys.interaction(s));
    });
    let spins = (sys.stats().n * tau) as f64;
    let log_z = |lambda: f64| {
        let mut acc = LogSumExp::new();
        for (&mg, &e) in magnets.iter().zip(&energies) {
            acc.add(lambda * mg - gamma * e);
        }
        acc.value()
    };
    // d/d lambda [lambda * spins * m - ln Z] = spins * m - <sum S>.
    let slope = |lambda: f64| {
        let lz = log_z(lambda);
        let mean: f64 = magnets
            .iter()
            .zip(&energies)
            .map(|(&mg, &e)| mg * (lambda * mg - gamma * e - lz).exp())
            .sum();
        spins * m - mean
    };
    let mut span = 1.0;
    while slope(-span) <= 0.0 || slope(span) >= 0.0 {
        span *= 2.0;
        if span > 1e6 {
            return Err(Error::Numerical(
                "conjugate field bracket did not close".to_string(),
            ));
        }
    }
    let lambda = bisect(slope, -span, span);
    Ok(lambda * spins * m - log_z(lambda))
}

/// Zeroth-order value `n tau e(m)` of [`gibbs_free_energy`] at `H = 0`.
pub fn gibbs_free_energy_decoupled(n: usize, tau: usize, m: f64) -> Result<f64> {
    Ok((n * tau) as f64 * mean_field_entropy(m)?)
}
