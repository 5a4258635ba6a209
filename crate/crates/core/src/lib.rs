//! Chart-based numeric engine for projective connections and the algebra
//! of densities: an expression language with exact forward-mode jets,
//! coordinate transitions and tensor transformation laws, Thomas projective
//! symbols and the lift to an (n+1)-dimensional bundle, weighted densities
//! and their brackets, the invariant projective Laplacian, and geodesic /
//! parallel-transport integrators.

pub mod error;
pub mod expr;
pub mod connections;
pub mod geometry;
pub mod jet;

pub use error::{Error, Result};
