//! Local discontinuous Galerkin discretization of Dirichlet boundary control
//! for convection-diffusion-reaction equations, with a primal-dual active set
//! solver for box-constrained controls.

pub mod analysis;
pub mod cli;
pub mod checks;
pub mod control;
pub mod error;
pub mod geometry;
pub mod kkt;
pub mod ldg;
pub mod problems;
pub mod linsolve;
pub mod quadrature;
pub mod spaces;
pub mod study;

pub use error::{Error, Result};
