//! Random permutations with cycle weights and spatial random permutations.
//!
//! * [`nonspatial`]: exact engine for permutations weighted by cycle lengths.
//! * [`thermo`]: pressure, critical density and free energy of the spatial
//!   model in infinite volume.
//! * [`fourier`]: the occupation-number representation on a periodic box,
//!   solved exactly by dynamic programming.
//! * [`spatial`]: Metropolis Monte Carlo on positions and permutations.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod error;
pub mod fourier;
pub mod lattice;
pub mod nonspatial;
pub mod quadrature;
pub mod spatial;
pub mod stats;
pub mod thermo;
pub mod weights;

pub use dispersion::Dispersion;
pub use error::{Error, ErrorKind, Result};
pub use weights::{Tail, WeightSequence};
