//! Multi-target tracking with labeled random finite sets.
//!
//! The crate implements the GLMB family of multi-object Bayes filters over
//! labeled random finite sets: the delta-GLMB filter, its marginalized
//! variant (one hypothesis per label set instead of one per association
//! history), and the LMB filter obtained by matching existence probabilities
//! track by track. Single-object densities are Gaussian mixtures propagated
//! with Kalman prediction and unscented measurement updates, so nonlinear
//! sensors (bearing/range radar, range-only receivers) plug in without
//! linearization code.
//!
//! Module layout:
//!
//! * [`label`]: track labels `(birth scan, index)`.
//! * [`gaussian`]: Gaussian mixtures, Kalman prediction, unscented updates,
//!   mixture reduction.
//! * [`assignment`]: rectangular Hungarian solver and Murty's ranked
//!   K-best assignment enumeration.
//! * [`rfs`]: labeled multi-object densities (delta-GLMB, marginalized
//!   delta-GLMB, LMB) and the exact operations between them.
//! * [`filter`]: prediction / measurement-update steps composing the three
//!   filters, plus the sensor, birth, motion, and clutter models they need.
//! * [`scenario`]: surveillance scenario synthesis (piecewise constant
//!   velocity truth, radar and range-only measurement generation).
//! * [`metrics`]: OSPA multi-object miss distance.

pub mod assignment;
pub mod error;
pub mod filter;
pub mod gaussian;
pub mod label;
pub mod metrics;
pub mod rfs;
pub mod scenario;
pub(crate) mod util;

pub use error::{Error, Result};
pub use label::Label;
