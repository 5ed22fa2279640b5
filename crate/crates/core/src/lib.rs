//! Numerical toolkit for entropy-gain, recoverability and information-gain
//! inequalities of finite-dimensional quantum channels.

pub mod error;
pub mod linalg;
pub mod matfun;
pub mod entropy;
pub mod qcore;
pub mod recovery;
pub mod theorems;
pub mod cpdp;
pub mod bosonic;
pub mod campaign;

pub use error::{Error, Result};
