//! The 22-component wavelet feature vector and feature-table export.
//!
//! Layout (1-based component numbers):
//!
//! | # | content |
//! |---|---------|
//! | 1 | maneuver duration |
//! | 2-8 | steering speed GZ: var, mean, var A4, var D4, var D3, var D2, var D1 |
//! | 9-15 | lateral acceleration Ay, same sub-order |
//! | 16-22 | direct acceleration Ax, same sub-order |
//!
//! The block for components 9-15 is assigned to lateral acceleration by
//! symmetry with components 13-15; [`CHANNEL_BLOCKS`] is the single place to
//! change that assignment.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor::{Channel, Label, SensorSegment};
use crate::wavelet::{self, WaveletError};

pub const FEATURE_COUNT: usize = 22;

/// Channels feeding the three 7-component blocks, in component order.
pub const CHANNEL_BLOCKS: [(Channel, &str); 3] = [(Channel::Gz, "gz"), (Channel::Ay, "ay"), (Channel::Ax, "ax")];

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "duration",
    "gz_var",
    "gz_mean",
    "gz_a4_var",
    "gz_d4_var",
    "gz_d3_var",
    "gz_d2_var",
    "gz_d1_var",
    "ay_var",
    "ay_mean",
    "ay_a4_var",
    "ay_d4_var",
    "ay_d3_var",
    "ay_d2_var",
    "ay_d1_var",
    "ax_var",
    "ax_mean",
    "ax_a4_var",
    "ax_d4_var",
    "ax_d3_var",
    "ax_d2_var",
    "ax_d1_var",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error("missing column `{0}` in feature table")]
    MissingColumn(String),
    #[error("row {row}: cannot parse `{value}`")]
    BadValue { row: usize, value: String },
    #[error("feature table has no feature columns")]
    NoFeatures,
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
    #[error("json: {0}")]
    Json(String),
}

impl From<csv::Error> for FeatureError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) => FeatureError::Io(io.to_string()),
            _ => FeatureError::Csv(e.to_string()),
        }
    }
}

impl From<std::io::Error> for FeatureError {
    fn from(e: std::io::Error) -> Self {
        FeatureError::Io(e.to_string())
    }
}

/// 22 ordered wavelet features of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.values
    }

    /// Component by 1-based number, matching the table above.
    pub fn component(&self, number: usize) -> f64 {
        self.values[number - 1]
    }

    pub fn names() -> &'static [&'static str; FEATURE_COUNT] {
        &FEATURE_NAMES
    }
}

/// Compute the wavelet feature vector of a segment.
pub fn extract(segment: &SensorSegment) -> Result<FeatureVector, FeatureError> {
    let mut values = [0.0; FEATURE_COUNT];
    values[0] = segment.duration();
    for (block, (channel, _)) in CHANNEL_BLOCKS.iter().enumerate() {
        let signal = segment.channel(*channel);
        let dec = wavelet::decompose4(&signal)?;
        let base = 1 + 7 * block;
        values[base] = wavelet::variance(&signal)?;
        values[base + 1] = wavelet::mean(&signal)?;
        for (k, band) in dec.bands().iter().enumerate() {
            values[base + 2 + k] = wavelet::variance(band)?;
        }
    }
    Ok(FeatureVector { values })
}

/// One labeled row of a feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub segment_id: String,
    pub label: Label,
    pub values: Vec<f64>,
}

/// Named feature matrix shared by the wavelet and Gaussian feature families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn wavelet(segments: &[SensorSegment]) -> Result<Self, FeatureError> {
        let rows = segments
            .iter()
            .map(|s| {
                Ok(FeatureRow {
                    segment_id: s.id().to_string(),
                    label: s.label(),
                    values: extract(s)?.values.to_vec(),
                })
            })
            .collect::<Result<Vec<_>, FeatureError>>()?;
        Ok(FeatureTable {
            names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            rows,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Keep only the given 0-based columns, in the given order.
    pub fn project(&self, columns: &[usize]) -> FeatureTable {
        FeatureTable {
            names: columns.iter().map(|&c| self.names[c].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    segment_id: r.segment_id.clone(),
                    label: r.label,
                    values: columns.iter().map(|&c| r.values[c]).collect(),
                })
                .collect(),
        }
    }

    /// CSV with header `segment_id,label,f01,f02,...`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FeatureError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["segment_id".to_string(), "label".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("f{i:02}")));
        wtr.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.segment_id.clone(), row.label.to_string()];
            rec.extend(row.values.iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Read a table written by [`FeatureTable::write_csv`]. Column names are
    /// taken from `names` when its length matches, else the `fNN` headers.
    pub fn read_csv<R: Read>(reader: R, names: Option<&[&str]>) -> Result<Self, FeatureError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| FeatureError::MissingColumn(name.to_string()))
        };
        let id_col = find("segment_id")?;
        let label_col = find("label")?;
        let feature_cols: Vec<(usize, String)> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.len() > 1 && h.starts_with('f') && h[1..].chars().all(|c| c.is_ascii_digit()))
            .map(|(i, h)| (i, h.to_string()))
            .collect();
        if feature_cols.is_empty() {
            return Err(FeatureError::NoFeatures);
        }
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row = i + 2;
            let get = |c: usize| record.get(c).unwrap_or("");
            let bad = |c: usize| FeatureError::BadValue {
                row,
                value: get(c).to_string(),
            };
            let label: Label = get(label_col).parse().map_err(|_| bad(label_col))?;
            let values = feature_cols
                .iter()
                .map(|(c, _)| get(*c).parse::<f64>().map_err(|_| bad(*c)))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(FeatureRow {
                segment_id: get(id_col).to_string(),
                label,
                values,
            });
        }
        let names = match names {
            Some(n) if n.len() == feature_cols.len() => n.iter().map(|s| s.to_string()).collect(),
            _ => feature_cols.into_iter().map(|(_, h)| h).collect(),
        };
        Ok(FeatureTable { names, rows })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), FeatureError> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let file = std::fs::File::open(path)?;
        let mut table = Self::read_csv(file, None)?;
        if table.dim() == FEATURE_COUNT {
            table.names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        } else if table.dim() == crate::gaussfit::GAUSS_FEATURE_NAMES.len() {
            table.names = crate::gaussfit::GAUSS_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        }
        Ok(table)
    }

    pub fn to_json(&self) -> Result<String, FeatureError> {
        serde_json::to_string_pretty(self).map_err(|e| FeatureError::Json(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        serde_json::from_str(text).map_err(|e| FeatureError::Json(e.to_string()))
    }
}
