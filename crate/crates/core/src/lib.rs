//! Fock-space optics bench.
//!
//! Simulates a single driven Kerr bosonic mode in a truncated photon-number
//! basis and treats the amplitude lattice c_n as an optical field: linear
//! phase profiles act as prisms, quadratic ones as lenses, and the weak pump
//! plays the role of free propagation. On top of the propagators sit
//! closed-form paraxial predictors, state-engineering helpers, calibration
//! and analysis fits, a small bench-program DSL, and the built-in scenarios
//! exposed by the `fockbench` CLI.
//!
//! Unit conventions: angular frequencies in rad/us, times in us. Text-facing
//! frequencies are f = omega/2pi with Hz/kHz/MHz suffixes and are converted
//! exactly once, at the parse boundary (see `hilbert::mhz` and friends).

pub mod analysis;
pub mod analytic;
pub mod calibration;
pub mod dynamics;
pub mod elements;
pub mod error;
pub mod figures;
pub mod hilbert;
pub mod io;
pub mod linalg;
pub mod program;
pub mod states;

pub use dynamics::{build_hamiltonian, BandedHamiltonian, Method, PropagatorConfig};
pub use elements::{Element, MeasureData, MeasureKind, MeasurementRecord};
pub use error::{Error, Result};
pub use hilbert::{QubitLevel, StateVector, SystemParams};
pub use num_complex::Complex64;
