//! Plefka-expansion coefficients of the replicated Gibbs free energy.
//!
//! Even functions of `m` are evaluated through `q = m^2` and their
//! derivatives as `m * g(q)`, so `f(-m) == f(m)` and `f'(-m) == -f'(m)` hold
//! bit-for-bit.

use crate::error::{Error, Result};
use crate::moments::SufficientStats;

/// Negative mean-field entropy
/// `e(m) = (1+m)/2 ln((1+m)/2) + (1-m)/2 ln((1-m)/2)`, with `e(+-1) = 0`.
pub fn mean_field_entropy(m: f64) -> Result<f64> {
    if !(m.abs() <= 1.0) {
        return Err(Error::input(format!("magnetization {m} outside [-1, 1]")));
    }
    let xlnx = |p: f64| if p == 0.0 { 0.0 } else { p * p.ln() };
    Ok(xlnx(0.5 * (1.0 + m)) + xlnx(0.5 * (1.0 - m)))
}

/// Replica context for the general-`x` coefficients: `tau = x N` replicas
/// and `K = tau (tau - 1) / 2` replica pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlefkaContext {
    pub n: usize,
    pub n_samples: usize,
    pub x: f64,
    pub c1: f64,
    pub c2: f64,
    pub omega: f64,
}

impl PlefkaContext {
    pub fn new(stats: &SufficientStats, x: f64) -> Self {
        PlefkaContext {
            n: stats.n,
            n_samples: stats.n_samples,
            x,
            c1: stats.c1,
            c2: stats.c2,
            omega: stats.omega,
        }
    }

    pub fn tau(&self) -> f64 {
        self.x * self.n_samples as f64
    }

    pub fn replica_pairs(&self) -> f64 {
        let t = self.tau();
        0.5 * t * (t - 1.0)
    }
}

/// First-order coefficient for general `x`.
pub fn phi1_general(m: f64, ctx: &PlefkaContext) -> f64 {
    let n = ctx.n as f64;
    let big_n = ctx.n_samples as f64;
    let k = ctx.replica_pairs();
    let q = m * m;
    -(ctx.x * (n - 1.0) * big_n * ctx.c1 / (2.0 * n)) * q
        - ((n - 1.0) * k / (2.0 * n * big_n)) * q * q
}

/// Second-order coefficient for general `x`.
pub fn phi2_general(m: f64, ctx: &PlefkaContext) -> f64 {
    let n = ctx.n as f64;
    let big_n = ctx.n_samples as f64;
    let tau = ctx.tau();
    let k = ctx.replica_pairs();
    let q = m * m;
    let u = 1.0 - q;
    let n2 = n * n;
    -((n - 1.0) * (n - 1.0) * tau * big_n * ctx.omega / (2.0 * n2)) * q * u
        - ((n - 1.0) * tau * big_n * ctx.c2 / (4.0 * n2)) * u * u
        - ((n - 1.0) * k * ctx.c1 / n2) * q * u * u
        - ((n - 1.0) * k / (2.0 * n2 * big_n)) * (n + tau - 3.0) * q * q * u * u
        - ((n - 1.0) * k / (4.0 * n2 * big_n)) * (1.0 - q * q) * (1.0 - q * q)
}

/// Coefficients at `x = -1` with their scalar prefactors precomputed from
/// the data statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    n: f64,
    big_n: f64,
    c2: f64,
    // phi1(m) = a1 q - b1 q^2
    a1: f64,
    b1: f64,
    // Phi(m) = a1 q - p0 (c2 + ((N+1)/N)(q^2 - 1/(N+1)))
    p0: f64,
    // phi2 terms
    t_omega: f64,
    t_c2: f64,
    t_c1: f64,
    t_quartic: f64,
    t_const: f64,
}

impl Coefficients {
    pub fn new(stats: &SufficientStats) -> Self {
        Self::from_parts(stats.n, stats.n_samples, stats.c1, stats.c2, stats.omega)
    }

    pub fn from_parts(n: usize, n_samples: usize, c1: f64, c2: f64, omega: f64) -> Self {
        let n = n as f64;
        let big_n = n_samples as f64;
        let n2 = n * n;
        Coefficients {
            n,
            big_n,
            c2,
            a1: (n - 1.0) * big_n * c1 / (2.0 * n),
            b1: (n - 1.0) * (big_n + 1.0) / (4.0 * n),
            p0: (n - 1.0) * big_n / (4.0 * n),
            t_omega: (n - 1.0) * (n - 1.0) * big_n * big_n * omega / (2.0 * n2),
            t_c2: (n - 1.0) * big_n * big_n * c2 / (4.0 * n2),
            t_c1: (n - 1.0) * big_n * (big_n + 1.0) * c1 / (2.0 * n2),
            t_quartic: (n - 1.0) * (big_n + 1.0) * (n - big_n - 3.0) / (4.0 * n2),
            t_const: (n - 1.0) * (big_n + 1.0) / (8.0 * n2),
        }
    }

    /// First-order coefficient at `x = -1`.
    pub fn phi1(&self, m: f64) -> f64 {
        let q = m * m;
        self.a1 * q - self.b1 * q * q
    }

    /// `Phi(m)`: first-order coefficient plus the `gamma`-linear constant
    /// from the replica prefactor.
    pub fn phi(&self, m: f64) -> f64 {
        let q = m * m;
        let big_n = self.big_n;
        self.a1 * q - self.p0 * (self.c2 + ((big_n + 1.0) / big_n) * (q * q - 1.0 / (big_n + 1.0)))
    }

    /// Second-order coefficient at `x = -1`.
    pub fn phi2(&self, m: f64) -> f64 {
        let q = m * m;
        let u = 1.0 - q;
        let w = 1.0 - q * q;
        self.t_omega * q * u + self.t_c2 * u * u
            - self.t_c1 * q * u * u
            - self.t_quartic * q * q * u * u
            - self.t_const * w * w
    }

    /// `d phi1 / dm` (equal to `d Phi / dm`).
    pub fn d_phi1(&self, m: f64) -> f64 {
        let q = m * m;
        m * (2.0 * self.a1 - 4.0 * self.b1 * q)
    }

    pub fn d_phi2(&self, m: f64) -> f64 {
        let q = m * m;
        let u = 1.0 - q;
        m * (2.0 * self.t_omega * (1.0 - 2.0 * q)
            - 4.0 * self.t_c2 * u
            - 2.0 * self.t_c1 * u * (1.0 - 3.0 * q)
            - 4.0 * self.t_quartic * q * u * (1.0 - 2.0 * q)
            + 8.0 * self.t_const * q * (1.0 - q * q))
    }

    /// The constant separating `Phi` from `phi1`:
    /// `Phi(m) = phi1(m) - ((n-1)N/(4n)) (C2 - 1/N)`.
    pub fn phi_offset(&self) -> f64 {
        self.p0 * (self.c2 - 1.0 / self.big_n)
    }

    pub fn n(&self) -> f64 {
        self.n
    }
}

/// `Phi(m)` for the given statistics.
#[allow(non_snake_case)]
pub fn Phi(m: f64, stats: &SufficientStats) -> f64 {
    Coefficients::new(stats).phi(m)
}

pub fn phi2_minus1(m: f64, stats: &SufficientStats) -> f64 {
    Coefficients::new(stats).phi2(m)
}

pub fn d_phi1_dm(m: f64, stats: &SufficientStats) -> f64 {
    Coefficients::new(stats).d_phi1(m)
}

pub fn d_phi2_dm(m: f64, stats: &SufficientStats) -> f64 {
    Coefficients::new(stats).d_phi2(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hand_stats() -> SufficientStats {
        // n = 3, N = 2 example: C1 = -1/3, C2 = 1/3, Omega = 1/18, M = 0.
        SufficientStats::from_aggregates(3, 2, 0.0, -1.0 / 3.0, 1.0 / 3.0, 1.0 / 18.0).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn entropy_values() {
        assert!((mean_field_entropy(0.0).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert_eq!(mean_field_entropy(1.0).unwrap(), 0.0);
        assert_eq!(mean_field_entropy(-1.0).unwrap(), 0.0);
        assert!((mean_field_entropy(0.5).unwrap() + 0.562_335_144_618_1).abs() < 1e-12);
        assert!(mean_field_entropy(1.01).is_err());
        assert!(mean_field_entropy(f64::NAN).is_err());
    }

    #[test]
    fn phi1_general_examples() {
        let st = hand_stats();
        let ctx = PlefkaContext::new(&st, 1.0);
        assert_eq!(phi1_general(0.0, &ctx), 0.0);
        assert!((phi1_general(1.0, &ctx) - 1.0 / 18.0).abs() < 1e-15);

        // x = -1 uses K = N(N+1)/2.
        let ctx = PlefkaContext::new(&st, -1.0);
        assert_eq!(ctx.replica_pairs(), 3.0);
        let (n, big_n, c1) = (3.0, 2.0, -1.0 / 3.0);
        for &m in &[0.2, -0.6, 0.9] {
            let q: f64 = m * m;
            let want = ((n - 1.0) * big_n * c1 / (2.0 * n)) * q
                - ((n - 1.0) * (big_n + 1.0) / (4.0 * n)) * q * q;
            assert!((phi1_general(m, &ctx) - want).abs() < 1e-15);
            assert!((Coefficients::new(&st).phi1(m) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn phi_examples() {
        let st = hand_stats();
        let c = Coefficients::new(&st);
        // m = 0: -((n-1)N/(4n)) (C2 - 1/N) = -(1/3)(1/3 - 1/2) = 1/18
        assert!((c.phi(0.0) - 1.0 / 18.0).abs() < 1e-15);
        assert!((Phi(0.0, &st) - 1.0 / 18.0).abs() < 1e-15);

        let ones = SufficientStats::from_aggregates(5, 7, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(Phi(1.0, &ones).abs() < 1e-14);
    }

    #[test]
    fn phi2_examples() {
        let st = hand_stats();
        // m = 0: (n-1) N^2 C2 / (4 n^2) - (n-1)(N+1)/(8 n^2) = 2/27 - 1/12
        let want = 2.0 / 27.0 - 1.0 / 12.0;
        assert!((phi2_minus1(0.0, &st) - want).abs() < 1e-15);
        assert!(phi2_minus1(0.0, &st) < 0.0);
        assert_eq!(phi2_minus1(1.0, &st), 0.0);
        assert_eq!(phi2_minus1(-1.0, &st), 0.0);
        let ctx = PlefkaContext::new(&st, 0.5);
        assert_eq!(phi2_general(1.0, &ctx), 0.0);
        assert_eq!(phi2_general(-1.0, &ctx), 0.0);
    }

    #[test]
    fn derivatives_vanish_at_zero() {
        let st = hand_stats();
        assert_eq!(d_phi1_dm(0.0, &st), 0.0);
        assert_eq!(d_phi2_dm(0.0, &st), 0.0);
    }

    fn arb_stats() -> impl Strategy<Value = SufficientStats> {
        (
            2usize..500,
            1usize..400,
            -1.0f64..1.0,
            0.0f64..1.0,
            0.0f64..0.5,
            -1.0f64..1.0,
        )
            .prop_map(|(n, big_n, c1, extra, omega, m)| {
                let c2 = (c1 * c1 + extra * (1.0 - c1 * c1)).min(1.0);
                SufficientStats::from_aggregates(n, big_n, m, c1, c2, omega).unwrap()
            })
    }

    proptest! {
        #[test]
        fn even_and_odd_structure(st in arb_stats(), m in -1.0f64..1.0) {
            let c = Coefficients::new(&st);
            prop_assert_eq!(c.phi(m), c.phi(-m));
            prop_assert_eq!(c.phi2(m), c.phi2(-m));
            prop_assert_eq!(c.d_phi1(m), -c.d_phi1(-m));
            prop_assert_eq!(c.d_phi2(m), -c.d_phi2(-m));
        }

        #[test]
        fn phi_two_forms_agree(st in arb_stats(), m in -1.0f64..1.0) {
            let c = Coefficients::new(&st);
            let a = c.phi(m);
            let b = phi1_general(m, &PlefkaContext::new(&st, -1.0)) - c.phi_offset();
            prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
        }

        #[test]
        fn general_x_reproduces_minus_one(st in arb_stats(), m in -1.0f64..1.0) {
            let a = phi2_general(m, &PlefkaContext::new(&st, -1.0));
            let b = Coefficients::new(&st).phi2(m);
            prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
        }
    }
}
