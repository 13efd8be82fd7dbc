//! Sequential least-squares finite elements for the Poisson equation.
//!
//! The flux `p = grad u` is sought first in a space of piecewise curl-free
//! polynomials obtained by patch reconstruction, with one vector unknown per
//! element. The pressure `u` then follows from a continuous Lagrange solve
//! driven by the computed flux. A coupled discontinuous least-squares solver
//! is included as a baseline.

pub mod dls;
pub mod error;
pub mod field;
pub mod flux;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod penalty;
pub mod poly;
pub mod pressure;
pub mod problems;
pub mod quadrature;
pub mod reconstruction;
pub mod study;

pub use error::{Error, Result};
