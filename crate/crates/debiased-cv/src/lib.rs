//! Estimate the test error of a model selected by minimum validation error.
//!
//! Picking the model with the smallest validation error makes that minimum an
//! optimistic estimate of the chosen model's true test error. This crate
//! corrects the bias without refitting any model, working only with the
//! per-observation validation losses:
//!
//! - [`contrast`] debiases selection at the raw minimum by contrasting
//!   per-fold selections against held-out fold errors.
//! - [`randomized`] selects at the minimum of noise-perturbed errors and
//!   estimates the resulting test error from an anti-correlated companion
//!   noise sequence.
//! - [`bootstrap`] attaches confidence intervals to either estimate,
//!   resampling within folds when the losses came from cross-validation.
//! - [`sim`] contains the scenario generators, built-in learners, and study
//!   driver used to validate the estimators end to end.
//!
//! Both sample-splitting and K-fold cross-validation error matrices are
//! supported; see [`matrix::ErrorMatrix`] for the CSV interchange format.
//!
//! ```
//! use debiased_cv::prelude::*;
//! use ndarray::array;
//!
//! let em = ErrorMatrix::new(array![
//!     [0.0, 1.0],
//!     [2.0, 1.0],
//!     [4.0, 5.0],
//!     [6.0, 3.0],
//! ])?;
//! let (estimate, _partition) = contrast_with_folds(&em, 2, &mut seeded(7))?;
//! assert_eq!(estimate.estimate, estimate.q_selected + estimate.delta_hat);
//! # Ok::<(), debiased_cv::Error>(())
//! ```

pub mod bootstrap;
pub mod contrast;
pub mod error;
pub mod folds;
pub mod matrix;
pub mod randomized;
pub mod rng;
pub mod selection;
pub mod sim;

pub use error::{Error, Result};

/// The usual imports for working with the estimators.
pub mod prelude {
    pub use crate::bootstrap::{
        bootstrap_ci, resample, BootstrapOptions, BootstrapTarget, ConfidenceInterval,
    };
    pub use crate::contrast::{
        contrast_estimate, contrast_with_folds, nominal_error, ContrastEstimate,
    };
    pub use crate::error::{Error, Result};
    pub use crate::folds::{make_folds, FoldPartition};
    pub use crate::matrix::ErrorMatrix;
    pub use crate::randomized::{
        randomized_estimate, randomized_with_defaults, NoiseConfig, RandomizedEstimate,
    };
    pub use crate::rng::{seeded, subseed, substream};
    pub use crate::selection::{select_min, SelectionResult};
}
