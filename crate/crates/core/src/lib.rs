//! Maximal surfaces in Lorentz-Minkowski 3-space bounded by lightlike segments.
//!
//! The pipeline builds a maximal graph over a polygon from a step-function
//! Poisson integral whose jump points are solved for conformality, extends it
//! across its lightlike boundary segments by point symmetries at their
//! midpoints, and assembles doubly and triply periodic surfaces from the
//! midpoint-symmetry tessellation of the plane.

pub mod conformal;
pub mod error;
pub mod extend;
pub mod graph;
pub mod harmonic;
pub mod lorentz;
pub mod mesh;
pub mod pipeline;
pub mod tessellate;
pub mod verify;

pub use error::{Error, Result};
pub use lorentz::{CausalCharacter, LorentzVec3, PeriodLattice, PointSymmetry};
