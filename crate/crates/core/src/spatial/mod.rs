//! Metropolis Monte Carlo for the spatial model on the periodic box
//! `[0, L)^d`, with energy
//! `H_L(x, pi) = sum_i xi_L(x_i - x_{pi(i)}) + sum_l alpha_l r_l(pi)`
//! and Gaussian `xi`.

mod chain;
mod crossval;
mod potential;
mod state;

pub use chain::{
    mc_step, run_chain, run_chain_with, uniform_positions, ChainOutput, ChainRecord, ChainSummary, MCParams, MoveKind,
    StepOutcome,
};
pub use crossval::{cross_validate, CrossValidationCase, CrossValidationReport, McCheck, PermutationCheck};
pub use potential::{image_remainder, periodized_xi, reduce, PeriodicXi, XiPotential, IMAGE_REMAINDER_TARGET};
pub use state::{cycle_lengths, hamiltonian, Proposal, SpatialState};
