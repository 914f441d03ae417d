use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fcpca_core::clustering::{
    fcpca_fit, hard_fit, m_grid_range, select_model, to_crisp, FcpcaConfig, FcpcaFit, MembershipMatrix,
};
use fcpca_core::eval::rand_index_labels;
use fcpca_core::simgen::{EegDesign, LengthMode, OverlapDesign, ScenarioTruth, VarmaDesign};

use crate::error::{invalid, CliError, CliResult};
use crate::experiment::{aggregate, replicate, Scenario};
use crate::io::{
    align_labels, create_dir, crisp_strings, load_dataset, read_labels, read_memberships, save_dataset, write_csv,
    write_json, write_labels, write_memberships,
};
use crate::summary::{cvi_cell, HardSummary, Metrics, RunSummary};

#[derive(Debug, Parser)]
#[command(name = "fcpca", version, about = "Fuzzy clustering of multivariate time series on common principal subspaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuzzy clustering of a dataset.
    Cluster(ClusterArgs),
    /// Hard-assignment baseline.
    Hard(HardArgs),
    /// Write a synthetic scenario as a dataset directory.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Rand index and fuzzy detection of predicted labels.
    Evaluate(EvaluateArgs),
    /// Repeated simulate, cluster and score cycles.
    #[command(subcommand)]
    Replicate(ReplicateCommand),
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Fixed fuzziness exponent (> 1).
    #[arg(long, conflicts_with = "auto_m")]
    pub m: Option<f64>,
    /// Pick the fuzziness from the grid by minimal CVI (the default when
    /// `--m` is absent).
    #[arg(long)]
    pub auto_m: bool,
    /// Fuzziness grid as LO:HI:STEP.
    #[arg(long, value_name = "LO:HI:STEP")]
    pub m_grid: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub lags: usize,
    #[arg(long, default_value_t = 0.95)]
    pub var_ratio: f64,
    #[arg(long, default_value_t = 3)]
    pub replicates: usize,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Rescale each centered variable to unit variance.
    #[arg(long)]
    pub standardize: bool,
}

impl FitArgs {
    pub fn config(&self, clusters: usize) -> CliResult<FcpcaConfig> {
        let mut c = FcpcaConfig {
            clusters,
            lags: self.lags,
            var_ratio: self.var_ratio,
            replicates: self.replicates,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            standardize: self.standardize,
            ..FcpcaConfig::default()
        };
        if let Some(spec) = &self.m_grid {
            c.m_grid = parse_grid(spec)?;
        }
        c = match self.m {
            Some(m) => c.with_m(m),
            None => c.with_auto_m(),
        };
        c.validate()?;
        Ok(c)
    }
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid(format!("--m-grid `{spec}`: expected LO:HI:STEP")))?;
    if nums.len() != 3 {
        return Err(invalid(format!("--m-grid `{spec}`: expected LO:HI:STEP")));
    }
    Ok(m_grid_range(nums[0], nums[1], nums[2])?)
}

fn parse_cluster_grid(spec: &str) -> CliResult<Vec<usize>> {
    spec.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| invalid(format!("--cluster-grid `{spec}`: expected e.g. 2,3,4"))))
        .collect()
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Dataset directory or manifest file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub clusters: usize,
    /// Fit every listed cluster count and keep the one with minimal CVI.
    #[arg(long, value_name = "S1,S2,…")]
    pub cluster_grid: Option<String>,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Crisping threshold; rows whose largest membership is lower are "mixed".
    #[arg(long, default_value_t = 0.7)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Record wall time in summary.json (makes the file non-reproducible).
    #[arg(long)]
    pub record_time: bool,
}

#[derive(Debug, Args)]
pub struct HardArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub clusters: usize,
    #[arg(long, default_value_t = 2)]
    pub lags: usize,
    #[arg(long, default_value_t = 0.95)]
    pub var_ratio: f64,
    #[arg(long, default_value_t = 3)]
    pub replicates: usize,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub record_time: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VarmaArgs {
    #[arg(long, default_value_t = 20)]
    pub p: usize,
    /// A fixed length, `range` (200..600) or `MIN..MAX`.
    #[arg(long, default_value = "200")]
    pub length_mode: String,
    #[arg(long, default_value_t = 0.9)]
    pub ar_radius: f64,
    #[arg(long, default_value_t = 0.9)]
    pub ma_radius: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EegArgs {
    #[arg(long, default_value_t = 32)]
    pub channels: usize,
    #[arg(long, default_value_t = 256)]
    pub length: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OverlapArgs {
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 200)]
    pub length: usize,
    /// Interpolation-weight overlap between the two groups, in [0, 1].
    #[arg(long, default_value_t = 0.45)]
    pub overlap: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimOut {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// 10 VAR(1), 10 VMA(1) and 2 VARMA(1,1) series.
    Varma {
        #[command(flatten)]
        scenario: VarmaArgs,
        #[command(flatten)]
        out: SimOut,
    },
    /// 10 + 10 AR(2) band mixtures and 10 channel-split hybrids.
    Eeg {
        #[command(flatten)]
        scenario: EegArgs,
        #[command(flatten)]
        out: SimOut,
    },
    /// Two VAR(1) groups with interpolated coefficients.
    Overlap {
        #[command(flatten)]
        scenario: OverlapArgs,
        #[command(flatten)]
        out: SimOut,
    },
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted labels.csv.
    #[arg(long)]
    pub pred: PathBuf,
    /// Truth labels.csv.
    #[arg(long)]
    pub truth: PathBuf,
    /// memberships.csv, to count detected fuzzy series.
    #[arg(long)]
    pub memberships: Option<PathBuf>,
    #[arg(long, default_value_t = 0.7)]
    pub threshold: f64,
    /// Comma-separated ids of the designed-fuzzy series; by default those
    /// whose truth label is `fuzzy`.
    #[arg(long, value_name = "ID1,ID2,…")]
    pub fuzzy_truth: Option<String>,
    /// Directory for metrics.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplicateCommon {
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long, default_value_t = 2)]
    pub clusters: usize,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 0.7)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ReplicateCommand {
    Varma {
        #[command(flatten)]
        scenario: VarmaArgs,
        #[command(flatten)]
        common: ReplicateCommon,
    },
    Eeg {
        #[command(flatten)]
        scenario: EegArgs,
        #[command(flatten)]
        common: ReplicateCommon,
    },
    Overlap {
        #[command(flatten)]
        scenario: OverlapArgs,
        #[command(flatten)]
        common: ReplicateCommon,
    },
}

pub fn parse_length_mode(spec: &str) -> CliResult<LengthMode> {
    let bad = || invalid(format!("--length-mode `{spec}`: expected a length, `range` or MIN..MAX"));
    if spec == "range" {
        return Ok(LengthMode::RANGE_200_600);
    }
    if let Some((lo, hi)) = spec.split_once("..") {
        let (min, max) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        if min == 0 || min > max {
            return Err(bad());
        }
        return Ok(LengthMode::Range { min, max });
    }
    match spec.parse::<usize>() {
        Ok(t) if t > 0 => Ok(LengthMode::Fixed(t)),
        _ => Err(bad()),
    }
}

impl VarmaArgs {
    pub fn scenario(&self) -> CliResult<Scenario> {
        Ok(Scenario::Varma {
            p: self.p,
            lengths: parse_length_mode(&self.length_mode)?,
            design: VarmaDesign {
                ar_radius: self.ar_radius,
                ma_radius: self.ma_radius,
                ..VarmaDesign::default()
            },
        })
    }
}

impl EegArgs {
    pub fn scenario(&self) -> Scenario {
        Scenario::Eeg {
            channels: self.channels,
            len: self.length,
            design: EegDesign::default(),
        }
    }
}

impl OverlapArgs {
    pub fn scenario(&self) -> Scenario {
        Scenario::Overlap {
            p: self.p,
            len: self.length,
            design: OverlapDesign {
                overlap: self.overlap,
                ..OverlapDesign::default()
            },
        }
    }
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Cluster(a) => cmd_cluster(&a),
        Command::Hard(a) => cmd_hard(&a),
        Command::Simulate(s) => {
            let (scenario, out) = match s {
                SimulateCommand::Varma { scenario, out } => (scenario.scenario()?, out),
                SimulateCommand::Eeg { scenario, out } => (scenario.scenario(), out),
                SimulateCommand::Overlap { scenario, out } => (scenario.scenario(), out),
            };
            cmd_simulate(&scenario, out.seed, &out.out)
        }
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Replicate(r) => {
            let (scenario, common) = match r {
                ReplicateCommand::Varma { scenario, common } => (scenario.scenario()?, common),
                ReplicateCommand::Eeg { scenario, common } => (scenario.scenario(), common),
                ReplicateCommand::Overlap { scenario, common } => (scenario.scenario(), common),
            };
            cmd_replicate(&scenario, &common)
        }
    }
}

fn check_threshold(threshold: f64, clusters: usize) -> CliResult<()> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(invalid(format!("--threshold {threshold} outside (0, 1]")));
    }
    if threshold <= 1.0 / clusters as f64 {
        eprintln!("warning: threshold {threshold} <= 1/S; no series can be labelled mixed");
    }
    Ok(())
}

pub fn cmd_cluster(a: &ClusterArgs) -> CliResult<()> {
    let start = Instant::now();
    let loaded = load_dataset(&a.input)?;
    let config = a.fit.config(a.clusters)?;
    let ids = loaded.dataset.ids();
    create_dir(&a.out)?;

    let fit: FcpcaFit = match &a.cluster_grid {
        Some(spec) => {
            let grid = parse_cluster_grid(spec)?;
            if grid.contains(&0) {
                return Err(invalid("--cluster-grid entries must be at least 1"));
            }
            let selection = select_model(&loaded.dataset, &grid, &config)?;
            let header: Vec<String> = ["clusters", "m", "cvi", "objective"].map(String::from).to_vec();
            write_csv(
                &a.out.join("model_grid.csv"),
                &header,
                selection
                    .candidates
                    .iter()
                    .map(|c| vec![c.clusters.to_string(), c.m.to_string(), cvi_cell(c.cvi), c.objective.to_string()]),
            )?;
            selection.best
        }
        None => fcpca_fit(&loaded.dataset, &config)?,
    };
    let clusters = fit.run.clusters;
    check_threshold(a.threshold, clusters)?;
    let config = FcpcaConfig {
        clusters,
        ..config
    };

    write_memberships(&a.out.join("memberships.csv"), &ids, &fit.run.memberships)?;
    let crisp = to_crisp(&fit.run.memberships, a.threshold);
    write_labels(&a.out.join("labels.csv"), &ids, &crisp_strings(&crisp))?;
    if !fit.m_search.is_empty() {
        let header: Vec<String> = ["m", "cvi", "objective"].map(String::from).to_vec();
        write_csv(
            &a.out.join("cvi_grid.csv"),
            &header,
            fit.m_search
                .iter()
                .map(|g| vec![g.m.to_string(), cvi_cell(g.cvi), g.objective.to_string()]),
        )?;
    }
    let mut summary = RunSummary::from_fit(&a.input.display().to_string(), &fit, a.threshold, crisp.mixed_count(), &config);
    if a.record_time {
        summary.wall_time_secs = Some(start.elapsed().as_secs_f64());
    }
    write_json(&a.out.join("summary.json"), &summary)?;
    println!(
        "clustered {} series into {} clusters (m = {}, objective = {}, mixed = {})",
        ids.len(),
        clusters,
        fit.run.m,
        fit.run.objective,
        crisp.mixed_count()
    );
    Ok(())
}

pub fn cmd_hard(a: &HardArgs) -> CliResult<()> {
    let start = Instant::now();
    let loaded = load_dataset(&a.input)?;
    let config = FcpcaConfig {
        clusters: a.clusters,
        lags: a.lags,
        var_ratio: a.var_ratio,
        replicates: a.replicates,
        max_iter: a.max_iter,
        tol: a.tol,
        seed: a.seed,
        standardize: a.standardize,
        ..FcpcaConfig::default()
    };
    config.validate()?;
    let run = hard_fit(&loaded.dataset, &config)?;
    create_dir(&a.out)?;
    let ids = loaded.dataset.ids();
    let labels: Vec<String> = run.labels.iter().map(|l| (l + 1).to_string()).collect();
    write_labels(&a.out.join("labels.csv"), &ids, &labels)?;
    let mut summary = HardSummary::from_run(&a.input.display().to_string(), &run, &config);
    if a.record_time {
        summary.wall_time_secs = Some(start.elapsed().as_secs_f64());
    }
    write_json(&a.out.join("summary.json"), &summary)?;
    println!(
        "hard clustering of {} series into {} clusters (overall error = {})",
        ids.len(),
        a.clusters,
        run.overall_error
    );
    Ok(())
}

pub fn cmd_simulate(scenario: &Scenario, seed: u64, out: &Path) -> CliResult<()> {
    let (dataset, truth) = scenario.generate(seed)?;
    let mut notes = scenario.describe();
    notes["seed"] = seed.into();
    notes["fuzzy_ids"] = truth.fuzzy_indices.iter().map(|&i| dataset.ids()[i].clone()).collect::<Vec<_>>().into();
    save_dataset(out, &dataset, Some(&truth.labels), &notes.to_string())?;
    println!("wrote {} series to {}", dataset.len(), out.display());
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let truth = read_labels(&a.truth)?;
    let pred = read_labels(&a.pred)?;
    let ids: Vec<String> = truth.iter().map(|(i, _)| i.clone()).collect();
    let truth_labels: Vec<String> = truth.iter().map(|(_, l)| l.clone()).collect();
    let extra: Vec<&str> = {
        let known: std::collections::HashSet<&str> = ids.iter().map(|s| s.as_str()).collect();
        pred.iter().map(|(i, _)| i.as_str()).filter(|i| !known.contains(i)).collect()
    };
    if !extra.is_empty() {
        return Err(invalid(format!("{}: ids not in truth: {}", a.pred.display(), extra.join(", "))));
    }
    let pred_labels = align_labels(&pred, &ids, &a.pred)?;
    let ri = rand_index_labels(&pred_labels, &truth_labels)?;

    let mut metrics = Metrics {
        n: ids.len(),
        rand_index: ri,
        fuzzy_detected: None,
        fuzzy_total: None,
        threshold: None,
    };
    if let Some(path) = &a.memberships {
        let (m_ids, values) = read_memberships(path)?;
        let index: std::collections::HashMap<&str, usize> =
            m_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let missing: Vec<&str> = ids.iter().filter(|i| !index.contains_key(i.as_str())).map(|s| s.as_str()).collect();
        if !missing.is_empty() {
            return Err(invalid(format!("{}: missing ids: {}", path.display(), missing.join(", "))));
        }
        let ordered = nalgebra::DMatrix::from_fn(ids.len(), values.ncols(), |i, s| values[(index[ids[i].as_str()], s)]);
        // Six-decimal files can miss a unit row sum by a few 1e-6.
        let mut normalized = ordered;
        for mut row in normalized.row_iter_mut() {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row /= sum;
            }
        }
        let u = MembershipMatrix::new(normalized)?;
        let fuzzy_ids: Vec<String> = match &a.fuzzy_truth {
            Some(list) => list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            None => ids
                .iter()
                .zip(&truth_labels)
                .filter(|(_, l)| l.as_str() == ScenarioTruth::FUZZY)
                .map(|(i, _)| i.clone())
                .collect(),
        };
        let mut fuzzy_indices = Vec::with_capacity(fuzzy_ids.len());
        for f in &fuzzy_ids {
            match ids.iter().position(|i| i == f) {
                Some(i) => fuzzy_indices.push(i),
                None => return Err(invalid(format!("--fuzzy-truth: unknown id `{f}`"))),
            }
        }
        let truth = ScenarioTruth {
            labels: truth_labels.clone(),
            fuzzy_indices,
        };
        let detected = fcpca_core::eval::fuzzy_detection_count(&u, a.threshold, &truth)?;
        metrics.fuzzy_detected = Some(detected);
        metrics.fuzzy_total = Some(fuzzy_ids.len());
        metrics.threshold = Some(a.threshold);
    }
    create_dir(&a.out)?;
    write_json(&a.out.join("metrics.json"), &metrics)?;
    match (metrics.fuzzy_detected, metrics.fuzzy_total) {
        (Some(d), Some(t)) => println!("rand_index {ri:.6} fuzzy_detected {d}/{t}"),
        _ => println!("rand_index {ri:.6}"),
    }
    Ok(())
}

pub fn cmd_replicate(scenario: &Scenario, c: &ReplicateCommon) -> CliResult<()> {
    if c.runs == 0 {
        return Err(invalid("--runs must be at least 1"));
    }
    let config = c.fit.config(c.clusters)?;
    check_threshold(c.threshold, c.clusters)?;
    create_dir(&c.out)?;
    let path = c.out.join("results.csv");
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let flush_err = |e: csv::Error| invalid(format!("{}: {e}", path.display()));
    w.write_record(["seed", "m", "ri", "detected", "objective", "cvi"]).map_err(flush_err)?;
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let records = replicate(scenario, &config, c.threshold, c.fit.seed, c.runs, |r| {
        w.write_record([
            r.seed.to_string(),
            r.m.to_string(),
            r.ri.to_string(),
            r.detected.to_string(),
            r.objective.to_string(),
            cvi_cell(r.cvi),
        ])
        .map_err(flush_err)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        println!("seed {} m {} ri {:.4} detected {}", r.seed, r.m, r.ri, r.detected);
        Ok(())
    })?;
    let agg = aggregate(&records);
    let mut doc = serde_json::to_value(&agg).map_err(|e| invalid(e.to_string()))?;
    doc["scenario"] = scenario.describe();
    doc["threshold"] = c.threshold.into();
    doc["base_seed"] = c.fit.seed.into();
    doc["config"] = serde_json::to_value(&config).map_err(|e| invalid(e.to_string()))?;
    write_json(&c.out.join("aggregate.json"), &doc)?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "mean ri {:.4} (sd {:.4}) mean detected {:.3} over {} runs",
        agg.mean_ri, agg.sd_ri, agg.mean_detected, agg.runs
    )
    .ok();
    Ok(())
}

