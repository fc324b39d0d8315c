//! Almost periodic analysis of signals and almost periodic mild solutions of
//! nonautonomous semilinear parabolic systems on an interval.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod apfun;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod io;
pub mod lotka;
pub mod quad;
pub mod solver;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
