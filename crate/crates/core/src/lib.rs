//! Simulation and inference toolkit for repeated, multilevel qubit readout.
//!
//! * [`hmm`]: photon-number hidden Markov model, forward-backward and
//!   majority-vote classifiers.
//! * [`theory`]: closed-form infidelity of Fock codes under majority voting.
//! * [`protocol`]: Monte Carlo of the repeated readout protocol.
//! * [`transmon`]: continuous readout records and template classification.
//! * [`dynamics`]: driven master equation, pulse calibration, decay and QND fits.

pub mod codes;
pub mod dynamics;
pub mod error;
pub mod hmm;
pub mod linalg;
pub mod par;
pub mod params;
pub mod protocol;
pub mod rng;
pub mod transmon;
pub mod theory;

pub use codes::{builtin_code, builtin_codes, CodeSpec, LogicalOutcome};
pub use error::{Error, Result};
pub use params::SystemParams;
pub use rng::RandomStream;
