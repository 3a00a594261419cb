//! Tabular average-reward learners.
//!
//! [`LearnerState`] carries the four concrete update rules (Differential
//! Q-learning, RVI Q-learning, inter-option and intra-option Differential
//! Q-learning). [`GeneralRviQ`] is the shared asynchronous kernel they all
//! reduce to.

mod kernel;
mod qtable;
mod reference;
mod schedule;
mod state;

pub use kernel::{GeneralRviQ, KernelReduction};
pub use qtable::QTable;
pub use reference::{ReferenceFunction, ReferenceSpec, WeightRecord};
pub use schedule::StepSize;
pub use state::{Ledger, LearnerState};
