//! Matched subspace detection for signals on simplicial complexes.
//!
//! The crate is organised bottom-up:
//!
//! - [`complex`] builds order-2 simplicial complexes and their incidence,
//!   Hodge Laplacian and Dirac operators.
//! - [`spectral`] turns those operators into gradient/curl/harmonic bases,
//!   per order (Hodge) or over the stacked signal (Dirac).
//! - [`detector`] holds the energy detectors for complete and sampled data.
//! - [`performance`] gives the chi-square laws, thresholds and AUCs that
//!   characterise the detectors in closed form.
//! - [`harness`] runs seeded Monte-Carlo experiments end to end.

pub mod complex;
pub mod detector;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod performance;
pub mod spectral;

pub use complex::{CochainStack, SimplicialComplex};
pub use detector::{Decision, DetectorReport, Regime, RegularizerSpec, SamplingMask};
pub use error::{Error, Result};
pub use spectral::{DiracDecomposition, Flavor, HodgeDecomposition, Part, Parts, SubspaceBasis, SubspaceLabel};
