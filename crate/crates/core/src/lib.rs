//! RSSI-based detection of objects leaving their target area.
//!
//! The crate covers the whole pipeline:
//!
//! * [`propagation`]: Friis/Gaussian and non-singular/Rayleigh RSSI channels
//! * [`features`]: window averaging and standardization
//! * [`ocsvm`]: one-class SVM with an RBF kernel, trained by SMO
//! * [`analytic`]: closed-form detection rates via the Marcum Q-function
//! * [`placement`]: exhaustive AP / target-area placement search
//! * [`evaluation`]: LOOCV, F-measure and Pearson correlation
//! * [`simharness`]: scripted simulation experiments
//!
//! All randomness flows from explicit 64-bit seeds (see [`rng`]).

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod geometry;
pub mod matrix;
pub mod ocsvm;
pub mod placement;
pub mod propagation;
pub mod rng;
pub mod simharness;
pub mod special;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{Domain, Point, Polygon};
pub use matrix::Matrix;
pub use ocsvm::Verdict;
