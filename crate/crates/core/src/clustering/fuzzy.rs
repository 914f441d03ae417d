//! The alternating fuzzy clustering engine: weighted common subspaces per
//! cluster and lag, squared reconstruction errors, closed-form membership
//! updates, replicate selection and CVI-driven choice of `m` and `S`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{FcpcaConfig, Fuzziness};
use super::membership::{init_membership, objective, update_membership, MembershipMatrix};
use super::validity::cvi;
use crate::data::{MtsDataset, PreparedDataset};
use crate::error::{FcpcaError, Result};
use crate::subspace::{eigen_sym, make_basis, residual_energy, weighted_common_covariance, ProjectionBasis};

/// Re-initializations allowed when a cluster loses all membership weight.
pub const MAX_REINIT: usize = 5;

/// Bases indexed `[cluster][lag - 1]`.
pub type BasisGrid = Vec<Vec<ProjectionBasis>>;

/// One converged (or iteration-capped) fuzzy clustering solution.
#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub memberships: MembershipMatrix,
    pub bases: BasisGrid,
    /// Squared reconstruction errors `eᵢₛ` against `bases`.
    pub errors: DMatrix<f64>,
    /// Weighted objective of `memberships` against `bases`.
    pub objective: f64,
    /// `None` when undefined (single cluster).
    pub cvi: Option<f64>,
    pub m: f64,
    pub clusters: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Set when iteration stopped because the objective rose; the run then
    /// holds the last state before the rise.
    pub stopped_on_increase: bool,
    pub reinitializations: usize,
    pub k_per_lag: Vec<usize>,
    pub seed_used: u64,
    /// Objective after each accepted iteration.
    pub objective_trace: Vec<f64>,
    pub config: FcpcaConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub m: f64,
    pub replicate: usize,
    pub seed: u64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Best-per-`m` entry of an automatic fuzziness search.
#[derive(Debug, Clone, PartialEq)]
pub struct MSearchPoint {
    pub m: f64,
    pub objective: f64,
    pub cvi: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FcpcaFit {
    pub run: ClusterRun,
    pub replicates: Vec<ReplicateSummary>,
    /// Empty when `m` was fixed.
    pub m_search: Vec<MSearchPoint>,
}

impl FcpcaFit {
    pub fn selected_m(&self) -> f64 {
        self.run.m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCandidate {
    pub clusters: usize,
    pub m: f64,
    pub objective: f64,
    pub cvi: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ModelSelection {
    pub best: FcpcaFit,
    pub candidates: Vec<ModelCandidate>,
}

/// Seed of replicate `r` given the base seed.
pub fn replicate_seed(seed: u64, replicate: usize) -> u64 {
    seed.wrapping_add(replicate as u64)
}

/// Per-cluster, per-lag projection bases from the membership-weighted
/// common matrices, using the dataset's fixed component counts.
pub fn compute_axes(prepared: &PreparedDataset, memberships: &MembershipMatrix, m: f64) -> Result<BasisGrid> {
    let lags = prepared.lags();
    let clusters = memberships.n_clusters();
    let cells: Vec<(usize, usize)> = (0..clusters)
        .flat_map(|s| (1..=lags).map(move |l| (s, l)))
        .collect();
    let flat: Vec<ProjectionBasis> = cells
        .par_iter()
        .map(|&(s, l)| {
            let weights = memberships.column(s);
            let common = weighted_common_covariance(prepared.blocks(l), &weights, m).map_err(|e| match e {
                FcpcaError::DegenerateCluster { .. } => FcpcaError::DegenerateCluster { cluster: s },
                other => other,
            })?;
            let eig = eigen_sym(&common)?;
            make_basis(&eig, prepared.k_per_lag()[l - 1])
        })
        .collect::<Result<_>>()?;
    let mut it = flat.into_iter();
    Ok((0..clusters)
        .map(|_| it.by_ref().take(lags).collect())
        .collect())
}

/// `N×S` matrix of lag-summed reconstruction errors. Squared Frobenius
/// norms when `squared`, plain norms otherwise.
pub fn cluster_errors(prepared: &PreparedDataset, bases: &BasisGrid, squared: bool) -> Result<DMatrix<f64>> {
    let n = prepared.len();
    let clusters = bases.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            bases
                .iter()
                .map(|per_lag| {
                    per_lag.iter().enumerate().try_fold(0.0, |acc, (li, b)| {
                        let energy = residual_energy(&prepared.grams(li + 1)[i], b)?;
                        Ok(acc + if squared { energy } else { energy.sqrt() })
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(n, clusters, |i, s| rows[i][s]))
}

struct IterState {
    memberships: MembershipMatrix,
    bases: BasisGrid,
    errors: DMatrix<f64>,
    objective: f64,
}

struct IterOutcome {
    state: IterState,
    iterations: usize,
    converged: bool,
    stopped_on_increase: bool,
    trace: Vec<f64>,
}

fn iterate(
    prepared: &PreparedDataset,
    config: &FcpcaConfig,
    m: f64,
    init: MembershipMatrix,
) -> Result<IterOutcome> {
    let mut memberships = init;
    let mut current: Option<IterState> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut stopped_on_increase = false;

    for _ in 0..config.max_iter {
        let bases = compute_axes(prepared, &memberships, m)?;
        let errors = cluster_errors(prepared, &bases, true)?;
        let next = update_membership(&errors, m, config.zero_error_eps);
        let e = objective(&next, &errors, m);
        let rel = match &current {
            Some(prev) if e > prev.objective => {
                stopped_on_increase = true;
                converged = true;
                break;
            }
            Some(prev) => (prev.objective - e) / prev.objective.max(f64::MIN_POSITIVE),
            None => f64::INFINITY,
        };
        memberships = next.clone();
        current = Some(IterState {
            memberships: next,
            bases,
            errors,
            objective: e,
        });
        trace.push(e);
        if rel < config.tol {
            converged = true;
            break;
        }
    }

    let state = current.expect("max_iter >= 1 guarantees one accepted iteration");
    Ok(IterOutcome {
        state,
        iterations: trace.len(),
        converged,
        stopped_on_increase,
        trace,
    })
}

/// One random start run to convergence, re-drawing the initial memberships
/// from `rng` when a cluster degenerates (up to [`MAX_REINIT`] times).
pub fn fcpca_single<R: Rng + ?Sized>(
    prepared: &PreparedDataset,
    config: &FcpcaConfig,
    m: f64,
    clusters: usize,
    rng: &mut R,
) -> Result<ClusterRun> {
    if !(m > 1.0) {
        return Err(FcpcaError::InvalidArgument(format!("fuzziness must exceed 1, got {m}")));
    }
    if clusters == 0 {
        return Err(FcpcaError::InvalidArgument("need at least one cluster".into()));
    }
    let mut reinitializations = 0;
    loop {
        let init = init_membership(prepared.len(), clusters, rng);
        match iterate(prepared, config, m, init) {
            Ok(out) => {
                let mut run = ClusterRun {
                    memberships: out.state.memberships,
                    bases: out.state.bases,
                    errors: out.state.errors,
                    objective: out.state.objective,
                    cvi: None,
                    m,
                    clusters,
                    iterations: out.iterations,
                    converged: out.converged,
                    stopped_on_increase: out.stopped_on_increase,
                    reinitializations,
                    k_per_lag: prepared.k_per_lag().to_vec(),
                    seed_used: config.seed,
                    objective_trace: out.trace,
                    config: config.clone(),
                };
                if clusters >= 2 {
                    run.cvi = Some(cvi(&run)?);
                }
                return Ok(run);
            }
            Err(FcpcaError::DegenerateCluster { cluster }) => {
                reinitializations += 1;
                log::debug!("cluster {cluster} degenerated; re-initializing ({reinitializations})");
                if reinitializations > MAX_REINIT {
                    return Err(FcpcaError::DegenerateExhausted {
                        attempts: reinitializations - 1,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs `config.replicates` seeded starts at a fixed `m`; replicate `r`
/// draws from `seed + r`. Returns the lowest-objective run (earliest
/// replicate on ties) and per-replicate summaries in replicate order.
fn best_of_replicates(
    prepared: &PreparedDataset,
    config: &FcpcaConfig,
    m: f64,
    clusters: usize,
) -> Result<(ClusterRun, Vec<ReplicateSummary>)> {
    let runs: Vec<ClusterRun> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(config.seed, r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut run = fcpca_single(prepared, config, m, clusters, &mut rng)?;
            run.seed_used = seed;
            Ok(run)
        })
        .collect::<Result<_>>()?;
    let summaries = runs
        .iter()
        .enumerate()
        .map(|(r, run)| ReplicateSummary {
            m,
            replicate: r,
            seed: run.seed_used,
            objective: run.objective,
            iterations: run.iterations,
            converged: run.converged,
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.objective < best.objective { run } else { best })
        .expect("replicates >= 1");
    Ok((best, summaries))
}

/// Full fit on an already prepared dataset.
pub fn fit_prepared(prepared: &PreparedDataset, config: &FcpcaConfig) -> Result<FcpcaFit> {
    config.validate()?;
    let clusters = config.clusters;
    match config.fuzziness {
        Fuzziness::Fixed(m) => {
            let (run, replicates) = best_of_replicates(prepared, config, m, clusters)?;
            Ok(FcpcaFit {
                run,
                replicates,
                m_search: Vec::new(),
            })
        }
        Fuzziness::Auto => {
            let mut grid = config.m_grid.clone();
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let per_m: Vec<(ClusterRun, Vec<ReplicateSummary>)> = grid
                .par_iter()
                .map(|&m| best_of_replicates(prepared, config, m, clusters))
                .collect::<Result<_>>()?;
            let m_search = per_m
                .iter()
                .map(|(run, _)| MSearchPoint {
                    m: run.m,
                    objective: run.objective,
                    cvi: run.cvi,
                })
                .collect();
            let replicates = per_m.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
            // Minimal CVI wins; ascending grid order plus strict comparison
            // resolves ties toward the smaller m.
            let mut best: Option<ClusterRun> = None;
            for (run, _) in per_m {
                let better = match &best {
                    None => true,
                    Some(b) => cvi_key(run.cvi) < cvi_key(b.cvi),
                };
                if better {
                    best = Some(run);
                }
            }
            Ok(FcpcaFit {
                run: best.expect("non-empty grid"),
                replicates,
                m_search,
            })
        }
    }
}

fn cvi_key(cvi: Option<f64>) -> f64 {
    cvi.filter(|c| !c.is_nan()).unwrap_or(f64::INFINITY)
}

/// Centers the data, builds lag structures, fixes component counts and
/// runs the replicate (and, for automatic fuzziness, grid) search.
pub fn fcpca_fit(dataset: &MtsDataset, config: &FcpcaConfig) -> Result<FcpcaFit> {
    config.validate()?;
    let prepared = PreparedDataset::new(dataset, config.lags, config.var_ratio, config.standardize)?;
    fit_prepared(&prepared, config)
}

/// Fits every cluster count in `cluster_grid` and keeps the one with the
/// smallest CVI (ties toward fewer clusters). Single-cluster candidates
/// have no CVI and are only chosen when nothing else is available.
pub fn select_model(dataset: &MtsDataset, cluster_grid: &[usize], config: &FcpcaConfig) -> Result<ModelSelection> {
    if cluster_grid.is_empty() {
        return Err(FcpcaError::InvalidArgument("empty cluster grid".into()));
    }
    let mut grid = cluster_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let prepared = PreparedDataset::new(dataset, config.lags, config.var_ratio, config.standardize)?;
    let fits: Vec<FcpcaFit> = grid
        .iter()
        .map(|&s| fit_prepared(&prepared, &config.clone().with_clusters(s)))
        .collect::<Result<_>>()?;
    let candidates = fits
        .iter()
        .map(|f| ModelCandidate {
            clusters: f.run.clusters,
            m: f.run.m,
            objective: f.run.objective,
            cvi: f.run.cvi,
        })
        .collect();
    let mut best: Option<FcpcaFit> = None;
    for fit in fits {
        let better = match &best {
            None => true,
            Some(b) if b.run.cvi.is_none() => fit.run.cvi.is_some(),
            Some(b) => fit.run.cvi.is_some() && cvi_key(fit.run.cvi) < cvi_key(b.run.cvi),
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(ModelSelection {
        best: best.expect("non-empty grid"),
        candidates,
    })
}
