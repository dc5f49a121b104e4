//! End-to-end experiments: extract features, optionally select them, then
//! evaluate one or more classifiers and write the reports.
//!
//! Settings resolve in three layers: built-in defaults, then the JSON
//! config file, then command-line flags. Relative paths are taken from the
//! working directory.
//!
//! `run_experiment` writes into the output directory:
//!
//! * `metrics.json`: the [`ExperimentReport`]; byte-identical across
//!   re-runs of the same config;
//! * `table.txt`: aligned text table of the mean metrics;
//! * `config.json`: the effective configuration, ready to re-run;
//! * `provenance.json`: config hash, seed, version and a timestamp.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::LabeledDataset;
use crate::features::FeatureTable;
use crate::learners::{evaluate, MetricsReport, ModelSpec, SplitPlan};
use crate::selection::{nca_fit, NcaParams, WeightsReport, DEFAULT_THRESHOLD};
use crate::sensor::{load_segments, ManeuverKind, SensorSegment};
use crate::{gaussfit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    /// Duration plus wavelet variances, 22 columns.
    #[default]
    Wavelet22,
    /// Two-Gaussian fit parameters of the yaw rate, 6 columns.
    Gaussian6,
}

impl FeatureSource {
    pub fn description(self) -> &'static str {
        match self {
            FeatureSource::Wavelet22 => "Wavelet features",
            FeatureSource::Gaussian6 => "Gaussian function parameters",
        }
    }

    pub fn table(self, segments: &[SensorSegment]) -> Result<(FeatureTable, usize)> {
        match self {
            FeatureSource::Wavelet22 => Ok((FeatureTable::wavelet(segments)?, 0)),
            FeatureSource::Gaussian6 => Ok(gaussfit::feature_table(segments)?),
        }
    }
}

impl std::str::FromStr for FeatureSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wavelet22" => Ok(FeatureSource::Wavelet22),
            "gaussian6" => Ok(FeatureSource::Gaussian6),
            other => Err(Error::Config(format!("unknown feature source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSettings {
    pub train_fraction: f64,
    pub repeats: usize,
}

impl Default for SplitSettings {
    fn default() -> Self {
        let plan = SplitPlan::default();
        SplitSettings {
            train_fraction: plan.train_fraction,
            repeats: plan.repeats,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionSettings {
    pub enabled: bool,
    pub threshold: f64,
    pub nca: NcaParams,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        SelectionSettings {
            enabled: true,
            threshold: DEFAULT_THRESHOLD,
            nca: NcaParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Segment CSV files, concatenated in order.
    pub inputs: Vec<PathBuf>,
    /// Keep only segments of this kind; all segments when absent.
    #[serde(default)]
    pub kind: Option<ManeuverKind>,
    #[serde(default)]
    pub feature_source: FeatureSource,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub split: SplitSettings,
    #[serde(default)]
    pub selection: SelectionSettings,
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    SplitPlan::default().master_seed
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is plain data")
    }

    pub fn plan(&self) -> SplitPlan {
        SplitPlan {
            train_fraction: self.split.train_fraction,
            repeats: self.split.repeats,
            master_seed: self.seed,
        }
    }

    /// Hex SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config is plain data");
        hex(&Sha256::digest(&bytes))
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::Config("no input files".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models to evaluate".into()));
        }
        if !(self.selection.threshold.is_finite() && self.selection.threshold >= 0.0) {
            return Err(Error::Config("selection threshold must be finite and >= 0".into()));
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: Option<ManeuverKind>,
    pub feature_source: FeatureSource,
    pub segments: usize,
    pub dangerous: usize,
    /// 1-based columns of the feature table fed to the classifiers.
    pub selected_features: Vec<usize>,
    pub feature_names: Vec<String>,
    pub selection: Option<WeightsReport>,
    pub unconverged_fits: usize,
    pub split: SplitPlan,
    pub results: Vec<MetricsReport>,
}

impl ExperimentReport {
    /// True when any curve fit or classifier run stopped short of
    /// convergence.
    pub fn has_nonconvergence(&self) -> bool {
        self.unconverged_fits > 0 || self.results.iter().any(|r| r.nonconverged > 0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub created_unix_s: u64,
}

pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Vec<SensorSegment>> {
    let mut segments = Vec::new();
    for path in &cfg.inputs {
        segments.extend(load_segments(path)?);
    }
    if let Some(kind) = cfg.kind {
        segments.retain(|s| s.kind() == kind);
    }
    if segments.is_empty() {
        return Err(Error::Config("no segments of the requested kind in the inputs".into()));
    }
    Ok(segments)
}

/// Run an experiment in memory, without writing anything.
pub fn run_on_segments(cfg: &ExperimentConfig, segments: &[SensorSegment]) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (table, unconverged_fits) = cfg.feature_source.table(segments)?;

    let selection = if cfg.selection.enabled {
        let ds = LabeledDataset::from_table(&table)?;
        let fw = nca_fit(&ds, &cfg.selection.nca)?;
        Some(WeightsReport::new(&fw, cfg.selection.threshold))
    } else {
        None
    };
    let columns: Vec<usize> = match &selection {
        Some(w) => w.columns(),
        None => (0..table.dim()).collect(),
    };
    let used = table.project(&columns);

    let raw = used.matrix();
    let labels = used.labels();
    let plan = cfg.plan();
    let mut results = Vec::with_capacity(cfg.models.len());
    for spec in &cfg.models {
        log::info!("evaluating {} {}", spec.algorithm(), spec.row_label());
        results.push(evaluate(&raw, &labels, spec, &plan)?);
    }
    Ok(ExperimentReport {
        kind: cfg.kind,
        feature_source: cfg.feature_source,
        segments: segments.len(),
        dangerous: labels.iter().filter(|l| l.is_positive()).count(),
        selected_features: columns.iter().map(|c| c + 1).collect(),
        feature_names: used.names.clone(),
        selection,
        unconverged_fits,
        split: plan,
        results,
    })
}

/// Load the inputs, run, and write the report files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let segments = load_inputs(cfg)?;
    let report = run_on_segments(cfg, &segments)?;
    write_outputs(cfg, &report)?;
    Ok(report)
}

pub fn write_outputs(cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.json"), report.to_json())?;
    fs::write(dir.join("table.txt"), render_table(report))?;
    fs::write(dir.join("config.json"), cfg.to_json())?;
    let provenance = Provenance {
        config_sha256: cfg.hash(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    fs::write(
        dir.join("provenance.json"),
        serde_json::to_string_pretty(&provenance).expect("plain data"),
    )?;
    Ok(())
}

const METRIC_HEADERS: [&str; 3] = ["True-positive rate", "Precision", "AUC"];

fn metric_cells(r: &MetricsReport) -> [String; 3] {
    [r.tpr, r.precision, r.auc].map(fmt_metric)
}

/// Four decimals with trailing zeros trimmed, so a perfect score prints
/// as `1`.
pub fn fmt_metric(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// One row per model. A pure MLP or RBF sweep is headed by the hidden
/// neuron count; mixed sweeps name the classifier.
pub fn render_table(report: &ExperimentReport) -> String {
    let algorithms: Vec<&str> = report.results.iter().map(|r| r.model.algorithm()).collect();
    let sweep = algorithms.windows(2).all(|w| w[0] == w[1])
        && matches!(report.results.first().map(|r| &r.model), Some(ModelSpec::Mlp { .. } | ModelSpec::Rbf { .. }));
    let first = if sweep { "Number of hidden neurons" } else { "Classifier" };
    let mut rows = vec![std::iter::once(first).chain(METRIC_HEADERS).map(String::from).collect::<Vec<_>>()];
    for r in &report.results {
        let label = if sweep {
            r.row_label.clone()
        } else {
            format!("{} {}", r.model.algorithm(), r.row_label)
        };
        rows.push(std::iter::once(label).chain(metric_cells(r)).collect());
    }
    align(&rows)
}

/// Side-by-side comparison of feature families: for every classifier, one
/// row per report that evaluated it.
pub fn render_comparison(reports: &[ExperimentReport]) -> String {
    let mut rows = vec![["Classifier", "Considered features"]
        .into_iter()
        .chain(METRIC_HEADERS)
        .map(String::from)
        .collect::<Vec<_>>()];
    let mut keys: Vec<(String, String)> = Vec::new();
    for rep in reports {
        for r in &rep.results {
            let key = (r.model.algorithm().to_string(), r.row_label.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    for (algorithm, row_label) in keys {
        let mut first = true;
        for rep in reports {
            for r in rep
                .results
                .iter()
                .filter(|r| r.model.algorithm() == algorithm && r.row_label == row_label)
            {
                let name = if first { format!("{algorithm} {row_label}") } else { String::new() };
                first = false;
                rows.push(
                    [name, rep.feature_source.description().to_string()]
                        .into_iter()
                        .chain(metric_cells(r))
                        .collect(),
                );
            }
        }
    }
    align(&rows)
}
