//! Annealed heat-bath sampling of Boltzmann machines.
//!
//! Each sample is an independent chain: spins start uniform (inverse
//! temperature 0) and are swept through an inverse-temperature ladder ending
//! at 1; the final state is the sample. Chain `mu` draws from its own stream
//! seeded by `seed::child(master_seed, mu)`, so datasets do not depend on how
//! chains are scheduled across threads.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BoltzmannMachine, SpinConfiguration};
use crate::moments::Dataset;
use crate::seed::{self, Rng};

pub const DEFAULT_DELTA_BETA: f64 = 0.03;

/// Inverse temperatures `0 = beta_0 < beta_1 < ... < beta_T = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    betas: Vec<f64>,
    delta_beta: f64,
}

impl AnnealSchedule {
    /// `beta_t = min(t * delta_beta, 1)`. When `1 / delta_beta` is not an
    /// integer the last step is shorter than the others.
    pub fn new(delta_beta: f64) -> Result<Self> {
        if !(delta_beta > 0.0 && delta_beta <= 1.0) {
            return Err(Error::input(format!(
                "delta_beta must lie in (0, 1], got {delta_beta}"
            )));
        }
        let mut betas = vec![0.0];
        let mut t = 1u64;
        loop {
            let b = t as f64 * delta_beta;
            // Treat a product that lands within rounding of 1 as exactly 1.
            if b >= 1.0 - 1e-12 {
                betas.push(1.0);
                break;
            }
            betas.push(b);
            t += 1;
        }
        Ok(AnnealSchedule { betas, delta_beta })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn delta_beta(&self) -> f64 {
        self.delta_beta
    }

    /// Number of transitions `T`.
    pub fn steps(&self) -> usize {
        self.betas.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub delta_beta: f64,
    pub sweeps_per_beta: usize,
    /// Accumulate annealed importance weights alongside each sample.
    pub track_weights: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            delta_beta: DEFAULT_DELTA_BETA,
            sweeps_per_beta: 1,
            track_weights: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_beta > 0.0 && self.delta_beta <= 1.0) {
            return Err(Error::input(format!(
                "delta_beta must lie in (0, 1], got {}",
                self.delta_beta
            )));
        }
        if self.sweeps_per_beta == 0 {
            return Err(Error::input("sweeps_per_beta must be >= 1"));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<AnnealSchedule> {
        self.validate()?;
        AnnealSchedule::new(self.delta_beta)
    }
}

/// Working state of one chain: spins as `+-1.0` plus cached local fields
/// `local[i] = sum_j J_ij s_j`.
#[derive(Debug, Clone)]
pub(crate) struct Chain {
    spins: Vec<f64>,
    local: Vec<f64>,
}

impl Chain {
    pub(crate) fn new(machine: &BoltzmannMachine, spins: Vec<f64>) -> Self {
        let local = (0..machine.n())
            .map(|i| dot(machine.row(i), &spins))
            .collect();
        Chain { spins, local }
    }

    pub(crate) fn uniform(machine: &BoltzmannMachine, rng: &mut Rng) -> Self {
        let spins = (0..machine.n())
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        Chain::new(machine, spins)
    }

    /// One sequential heat-bath pass over sites `0..n`.
    pub(crate) fn sweep(&mut self, machine: &BoltzmannMachine, beta: f64, rng: &mut Rng) {
        let h = machine.field();
        for i in 0..self.spins.len() {
            let p_up = 1.0 / (1.0 + (-2.0 * beta * (h + self.local[i])).exp());
            let new = if rng.random::<f64>() < p_up {
                1.0
            } else {
                -1.0
            };
            if new != self.spins[i] {
                self.spins[i] = new;
                let delta = 2.0 * new;
                for (l, &jij) in self.local.iter_mut().zip(machine.row(i)) {
                    *l += jij * delta;
                }
            }
        }
    }

    pub(crate) fn exponent(&self, machine: &BoltzmannMachine) -> f64 {
        let magnet: f64 = self.spins.iter().sum();
        machine.field() * magnet + 0.5 * dot(&self.spins, &self.local)
    }

    pub(crate) fn spins_i8(&self) -> Vec<i8> {
        self.spins
            .iter()
            .map(|&s| if s > 0.0 { 1 } else { -1 })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One heat-bath sweep at inverse temperature `beta`, in place.
pub fn gibbs_sweep(
    machine: &BoltzmannMachine,
    beta: f64,
    state: &mut SpinConfiguration,
    rng: &mut Rng,
) -> Result<()> {
    if state.len() != machine.n() {
        return Err(Error::input(format!(
            "state has {} spins, machine has {}",
            state.len(),
            machine.n()
        )));
    }
    let spins = state.as_slice().iter().map(|&s| s as f64).collect();
    let mut chain = Chain::new(machine, spins);
    chain.sweep(machine, beta, rng);
    *state = SpinConfiguration::from_vec_unchecked(chain.spins_i8());
    Ok(())
}

/// Final state of one annealed chain and, when tracked, its log importance
/// weight `sum_t (beta_{t+1} - beta_t) * exponent(x_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealedSample {
    pub state: SpinConfiguration,
    pub log_weight: Option<f64>,
}

pub fn annealed_sample(
    machine: &BoltzmannMachine,
    schedule: &AnnealSchedule,
    config: &SamplerConfig,
    rng: &mut Rng,
) -> AnnealedSample {
    let mut chain = Chain::uniform(machine, rng);
    let mut log_weight = 0.0;
    let betas = schedule.betas();
    for t in 1..betas.len() {
        if config.track_weights {
            log_weight += (betas[t] - betas[t - 1]) * chain.exponent(machine);
        }
        for _ in 0..config.sweeps_per_beta {
            chain.sweep(machine, betas[t], rng);
        }
    }
    AnnealedSample {
        state: SpinConfiguration::from_vec_unchecked(chain.spins_i8()),
        log_weight: config.track_weights.then_some(log_weight),
    }
}

/// Run `count` independent annealed chains; chain `mu` uses
/// `seed::child(master_seed, mu)`.
pub fn annealed_chains(
    machine: &BoltzmannMachine,
    count: usize,
    config: &SamplerConfig,
    master_seed: u64,
) -> Result<Vec<AnnealedSample>> {
    let schedule = config.schedule()?;
    Ok((0..count)
        .into_par_iter()
        .map(|mu| {
            let mut rng = seed::rng_from(seed::child(master_seed, mu as u64));
            annealed_sample(machine, &schedule, config, &mut rng)
        })
        .collect())
}

/// `N` independent annealed samples from `machine`.
pub fn generate_dataset(
    machine: &BoltzmannMachine,
    n_samples: usize,
    config: &SamplerConfig,
    master_seed: u64,
) -> Result<Dataset> {
    if n_samples == 0 {
        return Err(Error::input("dataset needs N >= 1"));
    }
    let chains = annealed_chains(machine, n_samples, config, master_seed)?;
    let mut spins = Vec::with_capacity(n_samples * machine.n());
    for c in chains {
        spins.extend(c.state.into_inner());
    }
    Dataset::new(machine.n(), spins)
}
