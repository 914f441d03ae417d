use std::f64::consts::PI;

use fcpca_core::clustering::{cluster_errors, compute_axes, fcpca_single, init_membership, FcpcaConfig};
use fcpca_core::covariance::{center_series, lagged_cross_covariance};
use fcpca_core::eval::score_memberships;
use fcpca_core::simgen::{
    ar2_band_coeffs, eeg_scenario, varma_scenario, varma_scenario_with, EegBand, LengthMode, SimRng, VarmaDesign,
};
use fcpca_core::PreparedDataset;
use rand::SeedableRng;

const FS: f64 = 128.0;

/// Raw periodogram `|Σ x_t e^{−iωt}|² / T` at the Fourier frequencies
/// `j·fs/T`, `j = 1..T/2`, by direct summation.
fn periodogram(x: &[f64]) -> Vec<(f64, f64)> {
    let t = x.len();
    (1..t / 2)
        .map(|j| {
            let w = 2.0 * PI * j as f64 / t as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in x.iter().enumerate() {
                let a = w * n as f64;
                re += v * a.cos();
                im -= v * a.sin();
            }
            (j as f64 * FS / t as f64, (re * re + im * im) / t as f64)
        })
        .collect()
}

/// Centered moving average over `2h + 1` bins.
fn smooth(p: &[(f64, f64)], h: usize) -> Vec<(f64, f64)> {
    (0..p.len())
        .map(|i| {
            let lo = i.saturating_sub(h);
            let hi = (i + h + 1).min(p.len());
            let avg = p[lo..hi].iter().map(|v| v.1).sum::<f64>() / (hi - lo) as f64;
            (p[i].0, avg)
        })
        .collect()
}

#[test]
fn ar2_periodogram_peaks_at_design_frequency() {
    for band in EegBand::ALL {
        let coeffs = ar2_band_coeffs(band.peak_hz(), FS, 0.95).unwrap();
        let mut acc: Vec<(f64, f64)> = Vec::new();
        for seed in 0..4 {
            let x = coeffs.simulate(4096, 500, &mut SimRng::seed_from_u64(seed));
            let p = periodogram(&x);
            if acc.is_empty() {
                acc = p;
            } else {
                for (a, b) in acc.iter_mut().zip(p) {
                    a.1 += b.1;
                }
            }
        }
        let smoothed = smooth(&acc, 8);
        let peak = smoothed.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        assert!(
            (peak.0 - band.peak_hz()).abs() <= 1.0,
            "{} peak at {:.2} Hz, designed {}",
            band.name(),
            peak.0,
            band.peak_hz()
        );
    }
}

fn band_share(x: &[f64], bands: &[EegBand]) -> f64 {
    let p = periodogram(x);
    let total: f64 = p.iter().map(|v| v.1).sum();
    let inside: f64 = p
        .iter()
        .filter(|(f, _)| bands.iter().any(|b| (b.range_hz().0..b.range_hz().1).contains(f)))
        .map(|v| v.1)
        .sum();
    inside / total
}

#[test]
fn eeg_groups_carry_their_dominant_bands() {
    let (ds, truth) = eeg_scenario(6, 512, &mut SimRng::seed_from_u64(12)).unwrap();
    let g1 = [EegBand::Delta, EegBand::Gamma];
    let share = |label: &str| -> f64 {
        let idx = truth.group_indices(label);
        let mut sum = 0.0;
        for &i in &idx {
            let s = &ds.series()[i];
            for c in 0..s.dim() {
                let col: Vec<f64> = s.values.column(c).iter().copied().collect();
                sum += band_share(&col, &g1);
            }
        }
        sum / (idx.len() * ds.dim()) as f64
    };
    let (a, b) = (share("group1"), share("group2"));
    assert!(a > 0.5, "group 1 delta+gamma share {a}");
    assert!(b < 0.35, "group 2 delta+gamma share {b}");
    let fuzzy = share("fuzzy");
    assert!(fuzzy > b && fuzzy < a, "fuzzy share {fuzzy} outside ({b}, {a})");
}

#[test]
fn two_pure_groups_recovered_from_one_start() {
    let design = VarmaDesign {
        n_varma: 0,
        ..Default::default()
    };
    let (ds, truth) = varma_scenario_with(20, LengthMode::Fixed(200), &design, &mut SimRng::seed_from_u64(0)).unwrap();
    let prepared = PreparedDataset::new(&ds, 2, 0.95, false).unwrap();
    let run = fcpca_single(&prepared, &FcpcaConfig::default(), 1.4, 2, &mut SimRng::seed_from_u64(0)).unwrap();
    let score = score_memberships(&run.memberships, &truth, 0.7).unwrap();
    assert_eq!(score.ri, 1.0);
}

#[test]
fn full_rank_bases_reconstruct_exactly() {
    let (ds, _) = varma_scenario(3, LengthMode::Fixed(80), &mut SimRng::seed_from_u64(1)).unwrap();
    let prepared = PreparedDataset::new(&ds, 2, 1.0, false).unwrap();
    assert_eq!(prepared.k_per_lag(), &[6, 6]);
    let u = init_membership(prepared.len(), 2, &mut SimRng::seed_from_u64(2));
    let bases = compute_axes(&prepared, &u, 1.5).unwrap();
    let errors = cluster_errors(&prepared, &bases, true).unwrap();
    let scale = prepared.grams(1)[0].trace();
    assert!(errors.amax() < 1e-9 * scale);
}

#[test]
fn duplicated_series_get_identical_error_rows() {
    let (ds, _) = varma_scenario(4, LengthMode::Fixed(120), &mut SimRng::seed_from_u64(3)).unwrap();
    let mut series = ds.series().to_vec();
    let mut copy = series[4].clone();
    copy.id = "copy".into();
    series.push(copy);
    let ds = fcpca_core::MtsDataset::new(series).unwrap();
    let prepared = PreparedDataset::new(&ds, 2, 0.95, false).unwrap();
    let u = init_membership(prepared.len(), 3, &mut SimRng::seed_from_u64(4));
    let bases = compute_axes(&prepared, &u, 1.5).unwrap();
    let errors = cluster_errors(&prepared, &bases, true).unwrap();
    let last = prepared.len() - 1;
    assert_eq!(errors.row(4), errors.row(last));
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Lag-1 autocovariance trace of the VARMA(1,1) members against the medians
/// of the pure groups. Fails at the default design; see the README.
#[test]
#[ignore = "fuzzy VARMA lag-1 traces are not bracketed by the pure-group medians at this design"]
fn varma_fuzzy_lag1_trace_between_group_medians() {
    let seeds = 30;
    let mut hits = 0;
    for seed in 0..seeds {
        let (ds, truth) = varma_scenario(20, LengthMode::Fixed(200), &mut SimRng::seed_from_u64(seed)).unwrap();
        let trace = |i: usize| {
            let (c, _) = center_series(&ds.series()[i]).unwrap();
            lagged_cross_covariance(&c, 1).unwrap().matrix.trace()
        };
        let var = median(truth.group_indices("var").into_iter().map(trace).collect());
        let vma = median(truth.group_indices("vma").into_iter().map(trace).collect());
        let (lo, hi) = (var.min(vma), var.max(vma));
        if truth.fuzzy_indices.iter().all(|&i| (lo..=hi).contains(&trace(i))) {
            hits += 1;
        }
    }
    assert!(hits as f64 >= 0.7 * seeds as f64, "{hits}/{seeds} seeds bracketed");
}
