//! Hard (crisp) clustering baseline: each cluster's subspace comes from the
//! plain average of its members' block covariances, series move to the
//! cluster with the smallest lag-summed (unsquared) reconstruction error.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::FcpcaConfig;
use super::fuzzy::{cluster_errors, compute_axes, replicate_seed, BasisGrid};
use super::membership::MembershipMatrix;
use crate::data::{MtsDataset, PreparedDataset};
use crate::error::{FcpcaError, Result};

#[derive(Debug, Clone)]
pub struct HardRun {
    /// Zero-based cluster per series.
    pub labels: Vec<usize>,
    /// `Σᵢ Σ_l Eᵢ,labelᵢ(l)` against `bases`.
    pub overall_error: f64,
    pub bases: BasisGrid,
    /// Unsquared lag-summed errors against `bases`, `N×S`.
    pub errors: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Overall error after each accepted partition, starting with the
    /// initial one.
    pub error_trace: Vec<f64>,
    /// Times an emptied cluster was re-seeded.
    pub reseeds: usize,
    pub seed_used: u64,
}

fn indicator(labels: &[usize], clusters: usize) -> MembershipMatrix {
    let values = DMatrix::from_fn(labels.len(), clusters, |i, s| if labels[i] == s { 1.0 } else { 0.0 });
    MembershipMatrix::new(values).expect("indicator rows are stochastic")
}

/// Subspaces of each cluster from its members' averaged blocks.
pub fn hard_axes(prepared: &PreparedDataset, labels: &[usize], clusters: usize) -> Result<BasisGrid> {
    compute_axes(prepared, &indicator(labels, clusters), 1.0)
}

/// Recomputes the overall error of a partition from scratch.
pub fn hard_overall_error(prepared: &PreparedDataset, labels: &[usize], clusters: usize) -> Result<f64> {
    let bases = hard_axes(prepared, labels, clusters)?;
    let errors = cluster_errors(prepared, &bases, false)?;
    Ok(assigned_error(&errors, labels))
}

fn assigned_error(errors: &DMatrix<f64>, labels: &[usize]) -> f64 {
    labels.iter().enumerate().map(|(i, &s)| errors[(i, s)]).sum()
}

fn argmin_labels(errors: &DMatrix<f64>) -> Vec<usize> {
    errors
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for s in 1..row.len() {
                if row[s] < row[best] {
                    best = s;
                }
            }
            best
        })
        .collect()
}

/// Moves the worst-fitting series of a multi-member cluster into each empty
/// cluster. Returns the number of moves.
fn repair_empty(labels: &mut [usize], errors: &DMatrix<f64>, clusters: usize) -> usize {
    let mut moves = 0;
    loop {
        let mut counts = vec![0usize; clusters];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return moves;
        };
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| errors[(a, labels[a])].total_cmp(&errors[(b, labels[b])]).then(b.cmp(&a)));
        match donor {
            Some(i) => {
                labels[i] = empty;
                moves += 1;
            }
            None => return moves,
        }
    }
}

/// One random start of the hard baseline. Initial labels give every
/// cluster at least one member.
pub fn hard_cluster<R: Rng + ?Sized>(
    prepared: &PreparedDataset,
    clusters: usize,
    config: &FcpcaConfig,
    rng: &mut R,
) -> Result<HardRun> {
    let n = prepared.len();
    if clusters == 0 || clusters > n {
        return Err(FcpcaError::InvalidArgument(format!(
            "hard clustering needs 1 <= S <= N, got S = {clusters}, N = {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = if rank < clusters { rank } else { rng.random_range(0..clusters) };
    }

    let mut bases = hard_axes(prepared, &labels, clusters)?;
    let mut errors = cluster_errors(prepared, &bases, false)?;
    let mut overall = assigned_error(&errors, &labels);
    let mut trace = vec![overall];
    let mut converged = false;
    let mut reseeds = 0;
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        iterations += 1;
        let mut next = argmin_labels(&errors);
        reseeds += repair_empty(&mut next, &errors, clusters);
        if next == labels {
            converged = true;
            break;
        }
        let next_bases = hard_axes(prepared, &next, clusters)?;
        let next_errors = cluster_errors(prepared, &next_bases, false)?;
        let next_overall = assigned_error(&next_errors, &next);
        if next_overall > overall {
            // The overall error stopped decreasing; keep the current partition.
            converged = true;
            break;
        }
        let rel = (overall - next_overall) / overall.max(f64::MIN_POSITIVE);
        labels = next;
        bases = next_bases;
        errors = next_errors;
        overall = next_overall;
        trace.push(overall);
        if rel < config.tol {
            converged = true;
            break;
        }
    }

    Ok(HardRun {
        labels,
        overall_error: overall,
        bases,
        errors,
        iterations,
        converged,
        error_trace: trace,
        reseeds,
        seed_used: config.seed,
    })
}

/// Best of `config.replicates` hard runs (replicate `r` seeded with
/// `seed + r`), judged by overall error.
pub fn hard_fit(dataset: &MtsDataset, config: &FcpcaConfig) -> Result<HardRun> {
    config.validate()?;
    let prepared = PreparedDataset::new(dataset, config.lags, config.var_ratio, config.standardize)?;
    let runs: Vec<HardRun> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(config.seed, r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut run = hard_cluster(&prepared, config.clusters, config, &mut rng)?;
            run.seed_used = seed;
            Ok(run)
        })
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.overall_error < best.overall_error { run } else { best })
        .expect("replicates >= 1"))
}
