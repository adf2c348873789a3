//! Poisson structures on duals of Lie algebroids, their connection-twisted
//! refinements, and the stochastic Hamiltonian dynamics they generate.
//!
//! Coordinates are always chart coordinates on an open subset of `R^m`.
//! Index convention for algebroid structure functions, used throughout:
//! `C^γ_{αβ}` is stored at `[γ][α][β]` and means `[e_α, e_β] = C^γ_{αβ} e_γ`.

// Tensor contractions read more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod algebroid;
pub mod connection;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod models;
pub mod poisson;
pub mod polynomial;
pub mod rng;
pub mod sde;

pub use error::{Error, Result};
pub use geometry::{Point, ScalarField, Tensor3};
pub use poisson::PoissonStructure;
