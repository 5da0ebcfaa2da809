//! Numerical laboratory for quasilines: spectral Beltrami solver, canonical
//! antisymmetric representations, the symmetric Harnack inequality, covering
//! sums along holomorphic motions and dimension estimates.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod dimension;
pub mod error;
pub mod field;
pub mod generate;
pub mod grid;
pub mod harnack;
pub mod motion;
pub mod qcmap;
pub mod solver;
pub mod spectral;
pub mod thermo;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use field::{BeltramiField, EllipseField, SymmetryResiduals};
pub use grid::GridSpec;
pub use qcmap::{Curve, Normalization, PlaneMap, QcMap};
pub use solver::SolverOptions;
