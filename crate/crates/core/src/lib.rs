//! Finite-volume simulation of the attraction-repulsion chemotaxis system
//! with consumed chemoattractant and produced chemorepellent, together with
//! the closed-form boundedness thresholds it is checked against.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod elliptic;
pub mod grid;
pub mod kinetics;
pub mod mms;
pub mod stepper;
pub mod theory;

pub use diagnostics::DiagRecord;
pub use grid::{GridSpec, ScalarField};
pub use kinetics::ModelParams;
pub use stepper::{RunConfig, SimState, Termination};
