//! Online learners that track the best principal subspace, expert subset, or
//! variance-minimizing direction of a non-stationary stream.
//!
//! The learners share one recipe: an exponentiated-gradient (or matrix
//! exponentiated-gradient) step, a fixed-share mix toward the uniform
//! distribution so that old commitments can be unlearned, and, where the
//! comparator class is a subset or subspace, a projection onto the capped
//! probability simplex followed by a decomposition into corners for sampling.
//!
//! Modules:
//! - [`linalg`]: dense symmetric eigen machinery, density and projection matrices;
//! - [`simplex`]: capped simplex geometry (capping, corner decomposition, fixed share);
//! - [`experts`]: randomized best-subset-of-experts learner;
//! - [`pca`]: randomized online PCA over density matrices;
//! - [`variance`]: variance minimization over the unit sphere and the simplex;
//! - [`comparators`]: hindsight baselines and interval oracles;
//! - [`harness`]: stream generation, experiment orchestration, regret measurement;
//! - [`audit`]: numerical checks of the per-step inequalities and regret bounds.

pub mod audit;
pub mod comparators;
pub mod error;
pub mod experts;
pub mod harness;
pub mod linalg;
pub mod pca;
pub mod simplex;
pub mod variance;

pub use error::{Error, Result};
