//! Adaptive cubic regularization with general norms.
//!
//! The crate minimizes smooth nonconvex functions with adaptive-regularization
//! methods whose regularizer `σ/(p+1)! ‖s‖^{p+1}` may use a non-smooth norm
//! (ℓ1, ℓ2 or ℓ∞):
//!
//! * [`ar_driver`] holds the first-order (`p ∈ {1, 2}`) and second-order
//!   outer loops;
//! * [`rqmin`] approximately minimizes the cubic-regularized quadratic model
//!   with Cauchy, retraction and eigenvalue steps;
//! * [`problems`] ships test objectives, a derivative checker and a
//!   brute-force grid oracle for two-dimensional models;
//! * [`region`] scans the plane for the admissible regions of the step
//!   conditions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ar_driver;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod model;
pub mod norms;
pub mod problems;
pub mod region;
pub mod rqmin;

pub use error::{Error, Result};
pub use linalg::EigenPair;
pub use model::{ARConfig, Problem, RegularizedQuadratic, StepCertificate};
pub use norms::Norm;
pub use rqmin::{RqminMode, RqminOptions, RqminResult};
