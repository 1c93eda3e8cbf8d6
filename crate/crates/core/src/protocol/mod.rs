//! Monte Carlo of the repeated readout protocol: heralded preparation,
//! photon-number-selective mapping, four-level ancilla readout and the
//! feedforward reset loop.

pub mod ancilla;
pub mod experiment;
pub mod herald;
pub mod model;
pub mod qnd;
pub mod trial;

pub use ancilla::{
    reset_ancilla, AncillaConfusion, AncillaLevel, AncillaOutcome, LeakModel, ResetOutcome,
};
pub use experiment::{run_experiment, Classifier, ExperimentConfig, ExperimentTable, InfidelityRow};
pub use herald::{herald_preparation, PreparationBelief};
pub use model::{ErrorModel, ResetModel};
pub use qnd::{qnd_experiment, QndPoint};
pub use trial::{simulate_trial, ReadoutSequence};
