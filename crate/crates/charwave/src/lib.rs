//! Conservative solutions of `u_tt - c(u) (c(u) u_x)_x = 0` computed in
//! characteristic coordinates, together with the weighted transport metric
//! on paths of solutions.
//!
//! The solution is represented by a [`chart::CharChart`]: the fields
//! `(u, alpha, beta, p, q, x, t)` on a uniform grid in the characteristic
//! labels `(X, Y)`.  Physical slices are level curves `t = tau` of that chart
//! ([`slice`]), and tangent vectors to one-parameter families of solutions are
//! measured with the norm in [`metric`].  [`oracle`] is an independent
//! `(t, x)` solver used only for cross-checks.

// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chart;
pub mod error;
pub mod metric;
pub mod oracle;
pub mod quad;
pub mod slice;
pub mod wavespeed;

pub use error::{Error, Result};
