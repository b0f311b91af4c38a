//! Two-phase liquid/gas flow with hydrogen dissolution, written as a
//! nonlinear complementarity problem and solved fully implicitly.

pub mod assembly;
pub mod constitutive;
pub mod driver;
mod error;
pub mod linalg;
pub mod mesh;
pub mod ncp;
pub mod nonlinear;
pub mod state;

pub use error::{Error, Result};
