//! Galerkin FEM–BEM symmetric coupling for the two-dimensional Helmholtz
//! transmission problem, with tools that expose the spurious resonances of
//! the first-kind boundary integral operators.

pub mod bem;
pub mod coupling;
pub mod error;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod potentials;
pub mod quadrature;
pub mod specialfn;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, C64};
pub use specialfn::Wavenumber;
