//! Discretion-index model of hiring discrimination with a synthetic audit
//! generator and the estimation battery used to analyse audit data.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod group;
pub mod linalg;
pub mod normal;
pub mod power;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod taskspace;
pub mod theory;

pub use error::{Error, Result};
pub use group::Group;
