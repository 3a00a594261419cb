//! Tabular average-reward reinforcement learning.
//!
//! The crate bundles four pieces that are meant to be used together:
//!
//! * [`mdp`] and [`options`]: finite MDP models, options, and the semi-MDP an
//!   option set induces (expected reward, expected length, landing kernel).
//! * [`chain`]: exact Markov-chain analysis under a fixed policy (recurrent
//!   classes, limiting matrix, fundamental matrix, reward rates).
//! * [`oracle`]: ground-truth optimal reward rates, Bellman residuals, and
//!   members of the pinned solution set of the optimality equation.
//! * [`learners`] and [`harness`]: Differential Q-learning, RVI Q-learning and
//!   the inter-/intra-option Differential learners, plus a seeded experiment
//!   driver that measures convergence against the oracles.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod harness;
pub mod learners;
mod linalg;
pub mod mdp;
pub mod options;
pub mod oracle;
pub mod sampling;

pub use error::{Error, Result};
pub use learners::{LearnerState, QTable, ReferenceFunction, StepSize};
pub use mdp::{StationaryPolicy, StructureClass, StructureTag, TabularMdp};
pub use options::{InducedSmdp, OptionSpec};
