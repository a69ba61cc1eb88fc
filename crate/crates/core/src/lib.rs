//! State-feedback H∞ synthesis for continuous-time LTI plants by gradient
//! descent on the closed-loop H∞ norm, with the gradient taken from a
//! penalized Riccati equation.
//!
//! The usual entry points are [`Plant::new`], [`lqr_initial_gain`],
//! [`synthesize`] and [`hinf_norm`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod gradient;
pub mod hinf;
pub mod linalg;
pub mod lti;
pub mod matrix_equations;
pub mod optimizer;
pub mod par;
pub mod synthetic;

pub use error::{Error, Result};
pub use gradient::{gradient_f_eta, GradientWorkspace};
pub use hinf::{hinf_norm, HinfEvaluation};
pub use lti::{closed_loop, ClosedLoop, Gain, Plant};
pub use matrix_equations::{solve_care_hinf, solve_care_lqr, solve_lyapunov};
pub use optimizer::{
    evaluate_f, lqr_initial_gain, modified_armijo, synthesize, AlphaMode, SynthesisConfig,
    SynthesisResult, Termination,
};
pub use par::Execution;
