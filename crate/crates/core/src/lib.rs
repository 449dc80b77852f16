//! Numerics for the conformal Schouten operator and `σ_k`-Yamabe type equations.
//!
//! * [`symfun`]: elementary symmetric functions, Gårding cones and the homotopy operator.
//! * [`conformal`]: `A^u`, Möbius pullbacks and the Kelvin regularity probe.
//! * [`bubbles`]: closed-form entire solutions, pointwise verification and Harnack sweeps.
//! * [`radial`]: the radial ODE and shooting.
//! * [`continuation`]: the radial Dirichlet problem and continuation in `t`.
//!
//! Data-parallel loops go through [`ExecPolicy`]; without the `parallel`
//! feature they always run sequentially.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubbles;
pub mod conformal;
pub mod continuation;
pub mod error;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod radial;
pub mod sampling;
pub mod symfun;

pub use bubbles::{
    bubble_field, c_constant, harnack_product, harnack_sweep, verify_solution, BubbleSpec,
};
pub use conformal::{
    kelvin_regularity_probe, schouten_conformal_change, schouten_flat, transform_field, Jet2,
    MobiusMap, SchoutenMatrix,
};
pub use continuation::{
    assemble_residual, continue_path, newton_solve, BvpSpec, ContinuationTrace,
};
pub use error::{Error, Result};
pub use exec::ExecPolicy;
pub use radial::{liouville_report, shoot, RadialProfile, StepControl};
pub use symfun::{f_homotopy, in_gamma_k, sigma, ConeId, EigenVec, OperatorSpec};
