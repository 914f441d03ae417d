//! Dataset directories, manifests and the CSV tables the commands emit.
//!
//! A dataset directory holds one CSV per series (a header row of variable
//! names, then one row per time point), optionally a `manifest.json` fixing
//! order, ids and labels, and optionally a `labels.csv` with `id,label`.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use fcpca_core::clustering::{CrispLabels, MembershipMatrix};
use fcpca_core::{MtsDataset, Series};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LABELS_FILE: &str = "labels.csv";
pub const MANIFEST_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative to the manifest's directory.
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: String,
    pub dimension: usize,
    #[serde(default)]
    pub notes: String,
    pub series: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: MtsDataset,
    /// Truth labels in series order, when the manifest or a `labels.csv`
    /// provides them.
    pub labels: Option<Vec<String>>,
}

/// Loads a manifest file, a directory with a manifest, or a bare directory
/// of CSV files (ordered by file name).
pub fn load_dataset(path: &Path) -> CliResult<LoadedDataset> {
    if path.is_file() {
        return load_manifest(path);
    }
    if !path.is_dir() {
        return Err(invalid(format!("{}: no such file or directory", path.display())));
    }
    let manifest = path.join(MANIFEST_FILE);
    if manifest.is_file() {
        return load_manifest(&manifest);
    }

    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| CliError::io(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv"))
                && p.file_name().is_some_and(|n| n != LABELS_FILE)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(invalid(format!("{}: directory contains no series CSV files", path.display())));
    }
    let mut series = Vec::with_capacity(files.len());
    for file in &files {
        let id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        series.push(read_series_csv(file, id)?);
    }
    let dataset = build_dataset(series, &files)?;
    let labels_path = path.join(LABELS_FILE);
    let labels = if labels_path.is_file() {
        Some(align_labels(&read_labels(&labels_path)?, &dataset.ids(), &labels_path)?)
    } else {
        None
    };
    Ok(LoadedDataset { dataset, labels })
}

fn load_manifest(path: &Path) -> CliResult<LoadedDataset> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: invalid manifest: {e}", path.display())))?;
    if manifest.series.is_empty() {
        return Err(invalid(format!("{}: manifest lists no series", path.display())));
    }
    let root = path.parent().unwrap_or(Path::new("."));
    let mut seen = HashSet::new();
    let mut files = Vec::with_capacity(manifest.series.len());
    let mut series = Vec::with_capacity(manifest.series.len());
    for entry in &manifest.series {
        if !seen.insert(entry.id.as_str()) {
            return Err(invalid(format!("{}: duplicate series id `{}`", path.display(), entry.id)));
        }
        let file = root.join(&entry.path);
        if !file.is_file() {
            return Err(invalid(format!(
                "{}: series `{}` refers to missing file {}",
                path.display(),
                entry.id,
                file.display()
            )));
        }
        let s = read_series_csv(&file, entry.id.clone())?;
        if s.dim() != manifest.dimension {
            return Err(invalid(format!(
                "{}: {} columns, manifest declares dimension {}",
                file.display(),
                s.dim(),
                manifest.dimension
            )));
        }
        series.push(s);
        files.push(file);
    }
    let dataset = build_dataset(series, &files)?;

    let given = manifest.series.iter().filter(|e| e.label.is_some()).count();
    let labels_path = root.join(LABELS_FILE);
    let labels = if given == manifest.series.len() {
        Some(manifest.series.iter().map(|e| e.label.clone().unwrap_or_default()).collect())
    } else if given > 0 {
        return Err(invalid(format!(
            "{}: {given} of {} series carry labels; label all or none",
            path.display(),
            manifest.series.len()
        )));
    } else if labels_path.is_file() {
        Some(align_labels(&read_labels(&labels_path)?, &dataset.ids(), &labels_path)?)
    } else {
        None
    };
    Ok(LoadedDataset { dataset, labels })
}

fn build_dataset(series: Vec<Series>, files: &[PathBuf]) -> CliResult<MtsDataset> {
    let p = series[0].dim();
    if let Some(i) = series.iter().position(|s| s.dim() != p) {
        return Err(invalid(format!(
            "{}: {} columns, expected {p} as in {}",
            files[i].display(),
            series[i].dim(),
            files[0].display()
        )));
    }
    let mut seen = HashMap::new();
    for (i, s) in series.iter().enumerate() {
        if let Some(j) = seen.insert(s.id.clone(), i) {
            return Err(invalid(format!(
                "duplicate series id `{}` ({} and {})",
                s.id,
                files[j].display(),
                files[i].display()
            )));
        }
    }
    Ok(MtsDataset::new(series)?)
}

fn csv_reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| format!(" line {}", p.line())).unwrap_or_default();
    invalid(format!("{}{line}: {e}", path.display()))
}

/// Reads one series: a header row, then `T` rows of `p` numbers.
pub fn read_series_csv(path: &Path, id: String) -> CliResult<Series> {
    let mut reader = csv_reader(path)?;
    let width = reader.headers().map_err(|e| csv_error(path, e))?.len();
    if width == 0 {
        return Err(invalid(format!("{}: empty header row", path.display())));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(invalid(format!(
                "{} line {line}: {} fields, header has {width}",
                path.display(),
                record.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                invalid(format!(
                    "{} line {line}, column {}: `{cell}` is not a number",
                    path.display(),
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(invalid(format!(
                    "{} line {line}, column {}: non-finite value",
                    path.display(),
                    col + 1
                )));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(invalid(format!("{}: no data rows", path.display())));
    }
    let matrix = DMatrix::from_row_slice(rows, width, &values);
    Ok(Series::new(id, matrix)?)
}

/// `id,label` rows in file order.
pub fn read_labels(path: &Path) -> CliResult<Vec<(String, String)>> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "label" {
        return Err(invalid(format!("{}: expected header `id,label`", path.display())));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(invalid(format!("{} line {line}: expected 2 fields", path.display())));
        }
        if !seen.insert(record[0].to_string()) {
            return Err(invalid(format!("{} line {line}: duplicate id `{}`", path.display(), &record[0])));
        }
        out.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(out)
}

/// Reorders `labels` to follow `ids`; every id must be present.
pub fn align_labels(labels: &[(String, String)], ids: &[String], source: &Path) -> CliResult<Vec<String>> {
    let map: HashMap<&str, &str> = labels.iter().map(|(i, l)| (i.as_str(), l.as_str())).collect();
    let missing: Vec<&str> = ids.iter().filter(|id| !map.contains_key(id.as_str())).map(|s| s.as_str()).collect();
    if !missing.is_empty() {
        return Err(invalid(format!(
            "{}: missing ids: {}",
            source.display(),
            missing.join(", ")
        )));
    }
    Ok(ids.iter().map(|id| map[id.as_str()].to_string()).collect())
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

/// Writes rows through a CSV writer and flushes.
pub fn write_csv<I, R>(path: &Path, header: &[String], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| write_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    text.push('\n');
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Writes every series as `<id>.csv`, plus `manifest.json` and, when labels
/// are given, `labels.csv`. Values are written in shortest round-trip form.
pub fn save_dataset(dir: &Path, dataset: &MtsDataset, labels: Option<&[String]>, notes: &str) -> CliResult<DatasetManifest> {
    create_dir(dir)?;
    let p = dataset.dim();
    let header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    let mut entries = Vec::with_capacity(dataset.len());
    for (i, s) in dataset.series().iter().enumerate() {
        let file = format!("{}.csv", s.id);
        let rows = s
            .values
            .row_iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>());
        write_csv(&dir.join(&file), &header, rows)?;
        entries.push(ManifestEntry {
            id: s.id.clone(),
            path: file,
            label: labels.map(|l| l[i].clone()),
        });
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION.into(),
        dimension: p,
        notes: notes.into(),
        series: entries,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    if let Some(labels) = labels {
        write_labels(&dir.join(LABELS_FILE), &dataset.ids(), labels)?;
    }
    Ok(manifest)
}

pub fn write_labels(path: &Path, ids: &[String], labels: &[String]) -> CliResult<()> {
    let header = vec!["id".to_string(), "label".to_string()];
    write_csv(path, &header, ids.iter().zip(labels).map(|(i, l)| vec![i.clone(), l.clone()]))
}

/// `id,cluster_1..cluster_S` with six decimals.
pub fn write_memberships(path: &Path, ids: &[String], u: &MembershipMatrix) -> CliResult<()> {
    let mut header = vec!["id".to_string()];
    header.extend((1..=u.n_clusters()).map(|s| format!("cluster_{s}")));
    let rows = ids.iter().enumerate().map(|(i, id)| {
        let mut row = vec![id.clone()];
        row.extend(u.row(i).iter().map(|v| format!("{v:.6}")));
        row
    });
    write_csv(path, &header, rows)
}

/// Reads a memberships table back; rows keyed by id.
pub fn read_memberships(path: &Path) -> CliResult<(Vec<String>, DMatrix<f64>)> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let s = headers.len().saturating_sub(1);
    if s == 0 || &headers[0] != "id" {
        return Err(invalid(format!("{}: expected header `id,cluster_1,…`", path.display())));
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != s + 1 {
            return Err(invalid(format!("{} line {line}: expected {} fields", path.display(), s + 1)));
        }
        ids.push(record[0].to_string());
        for cell in record.iter().skip(1) {
            values.push(
                cell.parse::<f64>()
                    .map_err(|_| invalid(format!("{} line {line}: `{cell}` is not a number", path.display())))?,
            );
        }
    }
    if ids.is_empty() {
        return Err(invalid(format!("{}: no rows", path.display())));
    }
    Ok((ids.clone(), DMatrix::from_row_slice(ids.len(), s, &values)))
}

/// Crisp labels as strings: 1-based cluster numbers or `mixed`.
pub fn crisp_strings(crisp: &CrispLabels) -> Vec<String> {
    crisp.labels.iter().map(|l| l.to_string()).collect()
}
