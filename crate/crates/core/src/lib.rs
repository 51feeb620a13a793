//! Continuous-time geometric RSK, the opposite-sign Toda lattice and the maps
//! between them, with numerical checks of the identities that connect them.
//!
//! Modules, bottom up:
//! - [`matrix`]: small dense linear algebra (minors, Gauss LDU, `e^{tA}`).
//! - [`triangle`]: triangles in log coordinates and the maps `f`, `h`, `g_λ`.
//! - [`grsk`]: path operators `P_i`, `P^r_i`, the maps `Π` and `Π^ξ`, `b(t)`.
//! - [`flows`]: triangle flows, the linear flow, the Toda lattice.
//! - [`critical`]: the potential `F_λ`, its minimizer and the gradient flow.
//! - [`tau`]: closed-form solutions and tau functions.
//! - [`stochastic`]: SDE simulation, Whittaker functions, KS tests.
//! - [`verify`]: property suites used by the command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod error;
pub mod exec;
pub mod flows;
pub mod grsk;
pub mod io;
pub mod matrix;
pub mod report;
pub mod stochastic;
pub mod tau;
pub mod triangle;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::{LowerUnitriangular, PositiveUpper, SquareMatrix};
pub use triangle::{LaxMatrix, Triangle};
