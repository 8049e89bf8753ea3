//! The occupation-number representation on the periodic box `[0, L)^d`.
//!
//! Integrating out positions turns the spatial model into a law on
//! occupation numbers of dual-lattice modes,
//! `p(n) = (1/Y) prod_k e^(-n_k eps(k)) h_{n_k}`, which a convolution DP over
//! the modes solves exactly.

mod dp;
mod enumerate;
mod lattice;
mod observables;
mod scan;

pub use dp::{partition_dp, DPTables};
pub use enumerate::{enumerate_small, SmallEnumeration, ENUMERATION_CAP};
pub use lattice::{build_lattice, Mode, ModeLattice};
pub use observables::{
    cycle_density_expectation, mode_marginals, n0_law_and_mgf, sample_occupations, typicality_probs,
    ProbabilityEstimate, Typicality, TypicalityMethod, ZeroModeLaw,
};
pub use scan::{macroscopic_scan, LatticeSpec, MacroscopicScan, ScanRow};
