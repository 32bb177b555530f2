//! Non-Markovian open-system dynamics as weighted ensembles of Lindblad
//! trajectories, each trajectory evaluated through Sz.-Nagy dilated unitaries
//! on a simulated two-qubit circuit.

pub mod channels;
pub mod circuit;
pub mod cli;
pub mod dilation;
pub mod elt;
pub mod error;
pub mod integrate;
pub mod jcref;
pub mod linalg;
pub mod stateprep;
pub mod synthesis;
pub mod weights;

pub use error::{Error, Result};
