//! Higher-order unfitted finite elements on level-set domains.
//!
//! The discrete domain is the zero sublevel set of a piecewise linear
//! level-set interpolant, mapped by an isoparametric mesh deformation onto
//! a higher-order boundary approximation. Dirichlet data are imposed with
//! Nitsche's method and small cuts are stabilized by a ghost penalty.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod basis;
pub mod config;
pub mod cut;
pub mod deformation;
pub mod error;
pub mod fe;
pub mod mesh;
pub mod poly;
pub mod postprocess;
pub mod problems;
pub mod quadrature;
pub mod roots;
pub mod solver;
pub mod sparse;
pub mod study;

pub use error::{Error, Result};
pub use config::StudyConfig;
pub use problems::{Geometry, Problem};
pub use study::{run_study, StudyReport};
