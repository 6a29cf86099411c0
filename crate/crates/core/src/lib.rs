//! High-precision simulation and analysis toolkit for the Bloch vector of a
//! two-level atom coupled to a thermal cavity field (resonant and detuned),
//! together with the number-theoretic machinery its quasiperiodic dynamics
//! calls for: Weyl equidistribution checks, continued-fraction candidate
//! sets, zero-crossing sweeps, the compressible-fluid analogy, and transient
//! fluorescence spectra.

pub mod bloch;
pub mod diophantine;
pub mod equidist;
pub mod error;
pub mod fast;
pub mod fluid;
pub mod precision;
pub mod series;
pub mod spectra;
pub mod zerocross;

pub use error::{Error, Result};
pub use precision::{required_digits, with_precision, HPReal, PrecisionContext};
