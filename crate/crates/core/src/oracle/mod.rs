//! Independent brute-force verifiers: replica identities, the Plefka
//! coefficients via Georges's operator, Monte Carlo evidence and exact
//! maximum likelihood.

mod evidence;
mod ml;
pub mod numdiff;
mod replica;
mod suites;

pub use evidence::{
    eb_likelihood_mc, eb_likelihood_mc_with, EvidenceEstimate, Proposal, JACKKNIFE_BLOCKS,
    MIN_DRAWS,
};
pub use ml::{gamma_from_couplings, ml_fit_exact, MlFit, MAX_EXACT_SPINS, ML_TOLERANCE};
pub use numdiff::{finite_difference, second_difference};
pub use replica::{
    georges_check, georges_check_with, gibbs_free_energy, gibbs_free_energy_decoupled,
    psi_identity_check, GeorgesCheck, PsiCheck, ReplicatedSystem, MAX_REPLICATED_SPINS,
};
pub use suites::{
    evidence_flat_top, evidence_flat_top_at, evidence_truncation_order, georges_suite,
    hand_dataset, mc_suite, ml_suite, psi_suite, run_suite, CaseReport, FlatTopReport,
    OracleOptions, Suite, SuiteReport, TruncationReport, FLAT_TOP_DRAWS, FLAT_TOP_GRID, FLAT_TOP_H,
    FLAT_TOP_J, FLAT_TOP_SAMPLES, FLAT_TOP_SPINS, GEORGES_TOLERANCE, PSI_TOLERANCE,
    TRUNCATION_GAMMAS,
};
