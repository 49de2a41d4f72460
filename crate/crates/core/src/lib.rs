//! Maximum-margin linear classification on sub-Gaussian mixtures.
//!
//! The crate covers the whole pipeline for the two-component mixture
//! `x = y·μ + V Λ^{1/2} u`:
//!
//! * [`model`] and [`sampling`] describe the data-generating law and draw
//!   reproducible datasets from it;
//! * [`solvers`] computes the minimum-norm interpolator, the hard-margin SVM
//!   (no intercept), the logistic gradient-descent direction and the
//!   support-vector proliferation test that decides when the first two agree;
//! * [`risk`] evaluates exact and Monte-Carlo population risk, the upper and
//!   lower risk bounds, their hypotheses, and concentration diagnostics;
//! * [`experiments`] runs seeded parameter sweeps and the regressions used to
//!   read scaling laws off them;
//! * [`cli`] backs the `bml` binary.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod risk;
pub mod rng;
pub mod sampling;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{CovarianceSpec, EntryDist, MeanSpec, MixtureModel, Rotation};
pub use sampling::{sample_dataset, Dataset};
pub use solvers::{LinearClassifier, Provenance};
