//! Rate regions, error exponents and random-coding simulation for
//! mismatched decoding over discrete memoryless cognitive multiple-access
//! channels.
//!
//! * [`prob`]: probability tables, information functionals, types.
//! * [`opt`]: constrained minimization of information functionals over
//!   sets of joint pmfs, plus a brute-force grid oracle.
//! * [`regions`]: superposition, binning and non-cognitive rate regions,
//!   hulls over input distributions, single-user lower bounds.
//! * [`exponents`]: random-coding error exponents of both schemes.
//! * [`sim`]: Monte Carlo simulation of the code ensembles and exact
//!   small-blocklength ensemble error probabilities.
//! * [`io`]: problem files, run manifests and report emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod exponents;
pub mod io;
pub mod opt;
pub mod prob;
pub mod regions;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Exec;
