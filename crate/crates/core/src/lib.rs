//! Equilibrium computation for sender-receiver games in which the sender's
//! report is compared against a noisy public anchor and distortion is costly.
//!
//! Modules follow the solver layers: numerical primitives, model description,
//! the Gaussian-quadratic closed forms, pure cheap talk, hybrids (labels plus
//! anchored reports), the general ODE characterization, the uninformative
//! threshold, and Monte Carlo verification.

pub mod cheap_talk;
pub mod equilibrium;
pub mod error;
pub mod gauss;
pub mod hybrid;
pub mod model;
pub mod numerics;
pub mod sturm;
pub mod verify;

pub use error::{Error, Result};
