//! Pareto-optimal motion primitive automata for the kinematic single-track
//! model, with receding-horizon multi-vehicle planning on top.

pub mod automaton;
pub mod error;
pub mod harness;
pub mod maneuver;
pub mod objective;
pub mod planner;
pub mod plot;
pub mod trims;
pub mod vehicle;

pub use error::{Error, Result};
