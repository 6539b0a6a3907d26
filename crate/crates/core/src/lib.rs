//! Differentially private release of marginal queries over categorical data.
//!
//! Marginals are decomposed into residuals with cheap in-axis array
//! operations ([`tensor`]). Noisy residual measurements are consolidated and
//! recombined into maximum-likelihood marginal estimates ([`grem`]), and
//! per-round noise is allocated across residuals by a small convex program
//! ([`crp`]). The end-to-end mechanisms live in [`mechanisms`]; [`kron`] holds
//! explicit Kronecker-product matrices used as a reference implementation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crp;
pub mod error;
pub mod grem;
pub mod kron;
pub mod mechanisms;
pub mod privacy;
pub mod tensor;

pub use error::{Error, Result};
pub use privacy::{Accountant, DpRng};
pub use tensor::{AttrSet, DataTable, Domain, Marginal, NdArray, Residual};
