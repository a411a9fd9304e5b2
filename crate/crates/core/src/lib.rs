//! Feasible point pursuit successive convex approximation (FPP-SCA) for
//! non-convex complex QCQPs, with a semidefinite relaxation baseline,
//! instance generators and a Monte-Carlo harness.

// `!(x >= 0.0)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod fpp;
pub mod gen;
pub mod hermitian;
pub mod problem;
pub mod schema;
pub mod sdr;

pub use error::{Error, Result};
pub use hermitian::{ComplexVector, HermitianMatrix};
pub use problem::{Feasibility, Metadata, QcqpInstance, QuadConstraint, SplitConstraint};
pub use fpp::{FppParams, FppResult, FppStatus, IterateTrace, KktCertificate};
