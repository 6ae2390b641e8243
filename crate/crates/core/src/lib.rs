//! Thermodynamic deformations of the min-plus semiring.

pub mod entropy;
pub mod error;
pub mod kl_spaces;
pub mod legendre;
mod solver;
pub mod successor;
pub mod trees;
pub mod tropical;
pub mod witt;

pub use entropy::{Measure, NaryFamily};
pub use error::{Error, Result};
pub use solver::SolverSettings;
pub use trees::GuessingTree;
pub use tropical::TropicalValue;
pub use witt::{OplusResult, WittContext};
