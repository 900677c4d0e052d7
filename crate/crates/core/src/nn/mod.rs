//! Neural inverse model of the wheel actuator: maps a desired wheel speed to
//! the input that holds it.

pub mod fit;
pub mod network;
pub mod scg;

pub use fit::{fit, training_hash, EpochRecord, FitConfig, ModelFile, Split, SplitFractions, StopReason, TrainReport};
pub use network::{Activation, Batch, MinMax, NetworkModel};
pub use scg::{minimize, ScgParams, ScgState, StepOutcome};
