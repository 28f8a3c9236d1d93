//! Asymptotic-preserving finite differences for strongly anisotropic
//! elliptic diffusion `-div(A grad u) = f` on a rectangle.

pub mod anisotropy;
pub mod assembly;
pub mod error;
pub mod fieldline;
pub mod grid;
pub mod harness;
pub mod jet;
pub mod linalg;
pub mod problems;

pub use error::{Error, Result};
