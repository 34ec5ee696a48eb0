//! Local models of Lagrangian torus fibrations with their fibre-preserving
//! anti-symplectic involutions, together with the numerics used to check
//! them: symplectic integration, action-angle charts, fixed-locus censuses,
//! monodromy and gradings.

pub mod affine;
pub mod dual;
pub mod error;
pub mod geom;
pub mod grading;
pub mod models;
pub mod report;
pub mod semiflat;
pub mod suite;
pub mod verify;

pub use error::{GeomError, Result};
