//! Numerics for the one-dimensional Serre-Green-Naghdi equations with surface
//! tension and their cut-off regularization.
//!
//! The crate is `no_std` and only needs an allocator. Fields are plain `f64`
//! slices sampled at cell centers of a [`Grid`]; everything else is built on
//! top of the calculus in [`grid`] and the tridiagonal solvers in [`tridiag`].
#![no_std]
#![warn(missing_debug_implementations)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod characteristics;
pub mod diagnostics;
pub mod dynamics;
pub mod elliptic;
mod error;
pub mod grid;
pub mod kinematics;
pub mod regularization;
pub mod scenario;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{Grid, Mode};
pub use kinematics::{Bounds, FlowState, Params};
