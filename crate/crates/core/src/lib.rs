//! Gradient flow of the anisotropic Landau-de Gennes energy with the
//! Ball-Majumdar singular potential on the periodic unit torus.

pub mod config;
pub mod diagnostics;
pub mod elastic;
pub mod error;
pub mod flow;
pub mod grid;
pub mod initial;
pub mod io;
pub mod potential;
pub mod quadrature;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{EigenData, QTensor};
