//! Thin obstacle problem in the plane with prescribed growth at infinity.
//!
//! * [`slit_basis`]: the half-integer homogeneous functions on the slit plane
//!   and exact calculus on their expansions.
//! * [`admissibility`]: data at infinity, admissible profiles, barriers.
//! * [`vi_solver`]: finite-difference obstacle problem and projected SOR.
//! * [`expansion`]: circle-trace Fourier analysis, decay coefficients.
//! * [`symmetry`]: line polynomials, half-space classification, conjugate
//!   pairs.

pub mod admissibility;
pub mod error;
pub mod expansion;
pub mod poly;
pub mod slit_basis;
pub mod symmetry;
pub mod vi_solver;

pub use error::{Error, Result};
