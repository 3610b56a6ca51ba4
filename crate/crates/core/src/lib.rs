//! Block diagonalization of `H = gamma H0 + V` by the Bloch wave operator and
//! the Schrieffer-Wolff transformation, with eternal leakage bounds checked
//! against simulated dynamics.

// `!(x > 0.0)` style guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod models;
pub mod operator;
pub mod partition;
pub mod rng;
pub mod suite;
pub mod sw;

pub use error::{Error, Result};
