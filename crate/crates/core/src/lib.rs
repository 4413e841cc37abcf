//! Gaussian-process regression on mixed continuous/categorical inputs.
//!
//! The crate covers the whole pipeline used to compare categorical kernels:
//!
//! * [`datasets`]: analytic test problems, sliced Latin hypercube designs,
//!   scaling and merging of categorical variables;
//! * [`kernels`]: continuous ARD RBF and every categorical parameterization
//!   (one-hot, compound symmetry, diffusion, LVGP, hypersphere variants,
//!   low-rank, EHH/FE, multiplicative, nested group kernels);
//! * [`gp`]: profiled marginal likelihood, multistart fitting and posterior;
//! * [`optimize`]: projected L-BFGS with finite-difference gradients and
//!   maximin LHS restarts;
//! * [`grouping`]: target-encoding (mean/sd) and kernel-distance group
//!   inference with silhouette-based selection of the group count;
//! * [`bench`]: RRMSE, performance profiles, Wilcoxon tests, Pareto points and
//!   the resumable suite runner.

pub mod bench;
pub mod datasets;
pub mod error;
pub mod gp;
pub mod grouping;
pub mod kernels;
pub mod linalg;
pub mod optimize;
pub mod rng;
pub mod timing;

pub use error::{Error, Result};
