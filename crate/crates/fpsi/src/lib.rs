//! Finite-element simulator for a free fluid and a poroelastic medium
//! separated by a thin elastic plate, advanced with a two-step splitting
//! scheme whose poroelastic geometry is mollified by convolution.

pub mod assembly;
pub mod cli;
pub mod consistency;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod regularizer;
pub mod scheme;
pub mod spaces;
pub mod transforms;
pub mod verify;

pub use error::{FpsiError, Result, Verdict};
