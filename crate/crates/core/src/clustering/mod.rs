//! Fuzzy and hard clustering on common principal subspaces.

mod config;
mod fuzzy;
mod hard;
mod membership;
mod validity;

pub use config::{default_m_grid, m_grid_range, FcpcaConfig, Fuzziness};
pub use fuzzy::{
    cluster_errors, compute_axes, fcpca_fit, fcpca_single, fit_prepared, replicate_seed,
    select_model, BasisGrid, ClusterRun, FcpcaFit, MSearchPoint, ModelCandidate, ModelSelection,
    ReplicateSummary, MAX_REINIT,
};
pub use hard::{hard_axes, hard_cluster, hard_fit, hard_overall_error, HardRun};
pub use membership::{
    init_membership, objective, to_argmax, to_crisp, update_membership, CrispLabel, CrispLabels,
    MembershipMatrix,
};
pub use validity::{cvi, min_projector_separation, SEPARATION_EPS};
