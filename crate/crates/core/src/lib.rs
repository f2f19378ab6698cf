//! Empirical Bayes estimation of the prior hyperparameters of a fully
//! connected Boltzmann machine from spin data.
//!
//! The estimator in [`estimator`] maps a dataset's sufficient statistics to
//! the field `H` and the coupling scale `gamma` in closed form. The other
//! modules generate synthetic data ([`model`], [`sampler`]), verify the
//! estimator's algebra by brute force ([`oracle`]) and run the reproduction
//! experiments ([`harness`]).

pub mod cli;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod model;
pub mod moments;
pub mod numeric;
pub mod oracle;
pub mod sampler;
pub mod seed;

pub use error::{Error, Result};
pub use estimator::{estimate, Branch, EstimateResult};
pub use model::{BoltzmannMachine, PriorFamily, PriorSpec, SpinConfiguration};
pub use moments::{Dataset, SufficientStats};
pub use sampler::{generate_dataset, SamplerConfig};
