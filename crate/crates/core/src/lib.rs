//! Quasilattices built from Pisot numbers by cut-and-project, their
//! substitution rules, and numerical analysis of refinable distributions
//! whose dilation is a Pisot number.

pub mod algnum;
pub mod error;
pub mod linalg;
pub mod mra;
pub mod poly;
pub mod qlat;
pub mod refine;
pub mod subst;
pub mod tol;

pub use error::{Error, ErrorClass, Result};
pub use tol::Tolerances;
