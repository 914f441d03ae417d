//! Fuzzy clustering of multivariate time series on membership-weighted
//! common principal subspaces built from lagged block covariances, with a
//! hard-assignment baseline, validity-index model selection, synthetic
//! scenario generators and Rand-index scoring.

pub mod clustering;
pub mod covariance;
pub mod data;
pub mod error;
pub mod eval;
pub mod simgen;
pub mod subspace;

pub use clustering::{fcpca_fit, hard_fit, select_model, ClusterRun, FcpcaConfig, FcpcaFit, Fuzziness, MembershipMatrix};
pub use covariance::Series;
pub use data::{MtsDataset, PreparedDataset};
pub use error::{FcpcaError, Result};
