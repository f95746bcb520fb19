//! Performance engine for multiplexed quantum repeater chains.
//!
//! The two-way protocol is evaluated exactly by tracking the full
//! distribution of surviving Bell pairs per segment through every nesting
//! level (link generation, optional DEJMPS distillation, swapping and
//! threshold resets). A Monte Carlo burst simulator cross-checks the
//! recursion; 2G-NC and quantum-parity-code one-way chains serve as
//! baselines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellstate;
pub mod config;
pub mod costs;
pub mod csvout;
pub mod densitymatrix;
pub mod error;
pub mod experiments;
pub mod mcoracle;
pub mod oneway;
pub mod optimizer;
pub mod pmf;
pub mod policy;
pub mod report;
pub mod twoway;
pub mod validation;

pub use bellstate::{BellDiagState, NoiseParams};
pub use error::{Error, Result};
pub use policy::{DecisionRule, Schedule};
pub use report::{Architecture, RunReport};
pub use twoway::{ChainParams, Physics};
