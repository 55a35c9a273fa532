//! Manufactured references, the discrete error metric against them, and
//! the mollification-width sweep.

pub mod jet;
pub mod metric;
pub mod oracle;
pub mod reference;
pub mod sweep;

pub use oracle::{check_reference_residuals, ResidualReport};
pub use reference::{build_reference, ReferenceAmplitudes, ReferenceKind, ReferenceSolution};
