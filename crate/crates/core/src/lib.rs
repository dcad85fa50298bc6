//! Weak Galerkin finite elements for the time-harmonic Maxwell system on
//! uniform hexahedral meshes of the unit cube.

pub mod cli;
pub mod condense;
pub mod error;
pub mod forms;
pub mod mesh;
pub mod polybasis;
pub mod system;
pub mod verify;
pub mod weakcalc;

pub use error::{Result, WgError};
