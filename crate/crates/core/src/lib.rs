//! Martin boundary of reflected random walks on the half-space
//! `Z^{d-1} x N`: generating functions, the convex geometry of the boundary
//! map, explicit harmonic functions, and Green's-function experiments.

pub mod error;
pub mod genfunc;
pub mod geometry;
pub mod green;
pub mod harmonic;
pub mod lattice;
pub mod martin;
pub mod model;
pub mod reference;
pub mod report;
pub mod roots;
pub mod tol;

pub use error::{Error, Result};
pub use genfunc::DualPoint;
pub use model::{LatticeMeasure, LatticeVector, Law, Status, WalkModel};
