//! Probabilistic Tsetlin Machine.
//!
//! Each Tsetlin automaton keeps a probability distribution over its `2N`
//! states instead of a single state. Feedback moves those distributions
//! through banded transition matrices, and inference samples automaton
//! actions from them, so repeated predictions on the same input vary and
//! yield predictive entropy, mutual information and calibration estimates.
//!
//! ```
//! use ptm::{data, model::{MachineConfig, Ptm}, training::{self, TrainingConfig}};
//!
//! let train = data::gen_noisy_xor(400, 0.0, 1).unwrap();
//! let mut machine = Ptm::new(MachineConfig::new(4, 2, 3.9, 20, 2), 2).unwrap();
//! training::train(&mut machine, &train, &TrainingConfig::new(20, 7), None).unwrap();
//! ```

pub mod automata;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod model;
pub mod rng;
pub mod training;
pub mod uncertainty;

pub use automata::{
    ClassicAutomaton, FeedbackCase, FeedbackType, StateProbabilityVector, TpmKind, TransitionMatrix,
    TransitionSet,
};
pub use data::Dataset;
pub use error::{PtmError, Result};
pub use model::{ClassicTm, MachineConfig, Machine, PredictionSamples, Ptm};
pub use uncertainty::{CalibrationReport, UncertaintyReport};
