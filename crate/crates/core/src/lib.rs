//! Verification engine for perturbative BV-BFV quantization of topological
//! quantum mechanics on the half-line and the interval.
//!
//! The exact side ([`graded_core`], [`weyl_moyal`], [`bvbfv_check`],
//! [`bf_theory`]) works over the rationals. The analytic side
//! ([`halfline_kernels`], [`rg_flow`]) evaluates heat-kernel propagators and
//! Feynman amplitudes in double precision.

pub mod bf_theory;
pub mod bvbfv_check;
pub mod cli;
pub mod error;
pub mod graded_core;
pub mod halfline_kernels;
pub mod rg_flow;
pub mod weyl_moyal;

pub use error::{Error, Result};
