//! Sensor samples, labeled maneuver segments and CSV ingestion.
//!
//! A CSV file may hold many segments. Rows are grouped by `segment_id` in
//! order of first appearance; every row of a segment must agree on `kind`
//! and `label`.
//!
//! ```text
//! segment_id,kind,label,t,ax,ay,az,gx,gy,gz
//! turn-safe-0000,turn,safe,0,0.01,0.2,9.80665,0,0,0.31
//! ```

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nominal sampling rate of the smartphone logger.
pub const NOMINAL_RATE_HZ: f64 = 20.0;

/// Fewest samples a segment may hold: four halving levels need 16 inputs.
pub const MIN_SEGMENT_LEN: usize = 16;

/// Allowed relative deviation of the sample spacing from `1 / rate_hz`.
pub const SPACING_TOLERANCE: f64 = 0.10;

/// CSV columns, in file order.
pub const CSV_COLUMNS: [&str; 10] = [
    "segment_id",
    "kind",
    "label",
    "t",
    "ax",
    "ay",
    "az",
    "gx",
    "gy",
    "gz",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("row {row}: timestamp {t} does not increase (previous {prev})")]
    NonMonotoneTime { row: usize, t: f64, prev: f64 },
    #[error("row {row}: sample spacing {dt} s is outside ±10% of {expected} s")]
    IrregularSampling { row: usize, dt: f64, expected: f64 },
    #[error("segment `{id}` has {len} samples, at least {MIN_SEGMENT_LEN} are required")]
    TooShortSegment { id: String, len: usize },
    #[error("row {row}: non-finite value in column `{column}`")]
    NonFiniteValue { row: usize, column: String },
    #[error("row {row}: cannot parse `{value}` in column `{column}`")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: segment `{id}` changes kind or label mid-segment")]
    InconsistentSegment { row: usize, id: String },
    #[error("sampling rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<csv::Error> for SensorError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) => SensorError::Io(io.to_string()),
            _ => SensorError::Csv(e.to_string()),
        }
    }
}

impl From<std::io::Error> for SensorError {
    fn from(e: std::io::Error) -> Self {
        SensorError::Io(e.to_string())
    }
}

/// Maneuver type of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ManeuverKind {
    #[serde(rename = "turn")]
    Turn,
    #[serde(rename = "uturn")]
    UTurn,
    #[serde(rename = "lane_change")]
    LaneChange,
    #[serde(rename = "brake")]
    Brake,
    #[serde(rename = "gas")]
    Gas,
}

impl ManeuverKind {
    pub const ALL: [ManeuverKind; 5] = [
        ManeuverKind::Turn,
        ManeuverKind::UTurn,
        ManeuverKind::LaneChange,
        ManeuverKind::Brake,
        ManeuverKind::Gas,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ManeuverKind::Turn => "turn",
            ManeuverKind::UTurn => "uturn",
            ManeuverKind::LaneChange => "lane_change",
            ManeuverKind::Brake => "brake",
            ManeuverKind::Gas => "gas",
        }
    }
}

impl fmt::Display for ManeuverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManeuverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ManeuverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown maneuver kind `{s}`"))
    }
}

/// Ground-truth class of a segment. `Dangerous` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Safe,
    Dangerous,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Safe => "safe",
            Label::Dangerous => "dangerous",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Dangerous
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "safe" => Ok(Label::Safe),
            "dangerous" => Ok(Label::Dangerous),
            "unlabeled" => Ok(Label::Unlabeled),
            _ => Err(format!("unknown label `{s}`")),
        }
    }
}

/// One 6-axis IMU reading. Accelerations in m/s², angular rates in rad/s.
///
/// `ax` is longitudinal (direct) acceleration, `ay` lateral, `gz` the
/// steering-wheel rotation speed. `az`, `gx` and `gy` are carried through
/// but no feature uses them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorSample {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
}

impl SensorSample {
    fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("t", self.t),
            ("ax", self.ax),
            ("ay", self.ay),
            ("az", self.az),
            ("gx", self.gx),
            ("gy", self.gy),
            ("gz", self.gz),
        ]
    }
}

/// Signal channel of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Ax,
    Ay,
    Az,
    Gx,
    Gy,
    Gz,
}

impl Channel {
    pub fn read(self, s: &SensorSample) -> f64 {
        match self {
            Channel::Ax => s.ax,
            Channel::Ay => s.ay,
            Channel::Az => s.az,
            Channel::Gx => s.gx,
            Channel::Gy => s.gy,
            Channel::Gz => s.gz,
        }
    }
}

/// A labeled, uniformly sampled window of IMU samples covering one maneuver.
///
/// Construction through [`SensorSegment::new`] enforces the invariants:
/// finite values, strictly increasing timestamps with spacing within ±10% of
/// `1 / rate_hz`, and at least [`MIN_SEGMENT_LEN`] samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSegment {
    id: String,
    kind: ManeuverKind,
    label: Label,
    rate_hz: f64,
    samples: Vec<SensorSample>,
}

impl SensorSegment {
    pub fn new(
        id: impl Into<String>,
        kind: ManeuverKind,
        label: Label,
        rate_hz: f64,
        samples: Vec<SensorSample>,
    ) -> Result<Self, SensorError> {
        let id = id.into();
        validate_samples(&id, rate_hz, &samples, |i| i + 1)?;
        Ok(SensorSegment {
            id,
            kind,
            label,
            rate_hz,
            samples,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> ManeuverKind {
        self.kind
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn samples(&self) -> &[SensorSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time from the first to the last sample, in seconds.
    pub fn duration(&self) -> f64 {
        duration(&self.samples)
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn channel(&self, ch: Channel) -> Vec<f64> {
        self.samples.iter().map(|s| ch.read(s)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Copy of this segment with every timestamp moved by `dt` seconds.
    pub fn shifted(&self, dt: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.t += dt;
        }
        out
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    /// Replace the samples, re-checking every invariant.
    pub fn with_samples(&self, samples: Vec<SensorSample>) -> Result<Self, SensorError> {
        SensorSegment::new(self.id.clone(), self.kind, self.label, self.rate_hz, samples)
    }
}

/// `t_last - t_first` of a sample run; zero for fewer than two samples.
pub fn duration(samples: &[SensorSample]) -> f64 {
    match (samples.first(), samples.last()) {
        (Some(first), Some(last)) => last.t - first.t,
        _ => 0.0,
    }
}

fn validate_samples(
    id: &str,
    rate_hz: f64,
    samples: &[SensorSample],
    row_of: impl Fn(usize) -> usize,
) -> Result<(), SensorError> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(SensorError::BadRate(rate_hz));
    }
    for (i, s) in samples.iter().enumerate() {
        if let Some((column, _)) = s.fields().into_iter().find(|(_, v)| !v.is_finite()) {
            return Err(SensorError::NonFiniteValue {
                row: row_of(i),
                column: column.to_string(),
            });
        }
    }
    let expected = 1.0 / rate_hz;
    for (i, pair) in samples.windows(2).enumerate() {
        let (prev, t) = (pair[0].t, pair[1].t);
        if t <= prev {
            return Err(SensorError::NonMonotoneTime {
                row: row_of(i + 1),
                t,
                prev,
            });
        }
        let dt = t - prev;
        if (dt - expected).abs() > SPACING_TOLERANCE * expected {
            return Err(SensorError::IrregularSampling {
                row: row_of(i + 1),
                dt,
                expected,
            });
        }
    }
    if samples.len() < MIN_SEGMENT_LEN {
        return Err(SensorError::TooShortSegment {
            id: id.to_string(),
            len: samples.len(),
        });
    }
    Ok(())
}

/// Load every segment in a CSV file, assuming the nominal 20 Hz rate.
pub fn load_segments(path: impl AsRef<Path>) -> Result<Vec<SensorSegment>, SensorError> {
    let file = std::fs::File::open(path)?;
    read_segments(file, NOMINAL_RATE_HZ)
}

struct PendingSegment {
    id: String,
    kind: ManeuverKind,
    label: Label,
    samples: Vec<SensorSample>,
    // file line of each sample, for error messages
    rows: Vec<usize>,
}

/// Parse segments from CSV text. Row numbers in errors are 1-based file
/// lines, the header being line 1.
pub fn read_segments<R: Read>(reader: R, rate_hz: f64) -> Result<Vec<SensorSegment>, SensorError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let mut col = [0usize; 10];
    for (slot, name) in col.iter_mut().zip(CSV_COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SensorError::MissingColumn(name.to_string()))?;
    }

    let mut pending: Vec<PendingSegment> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let field = |c: usize| record.get(col[c]).unwrap_or("");
        let bad = |c: usize| SensorError::BadValue {
            row,
            column: CSV_COLUMNS[c].to_string(),
            value: field(c).to_string(),
        };

        let id = field(0).to_string();
        let kind: ManeuverKind = field(1).parse().map_err(|_| bad(1))?;
        let label: Label = field(2).parse().map_err(|_| bad(2))?;
        let mut values = [0.0f64; 7];
        for (k, v) in values.iter_mut().enumerate() {
            let c = k + 3;
            *v = field(c).parse::<f64>().map_err(|_| bad(c))?;
            if !v.is_finite() {
                return Err(SensorError::NonFiniteValue {
                    row,
                    column: CSV_COLUMNS[c].to_string(),
                });
            }
        }
        let sample = SensorSample {
            t: values[0],
            ax: values[1],
            ay: values[2],
            az: values[3],
            gx: values[4],
            gy: values[5],
            gz: values[6],
        };

        let slot = *index.entry(id.clone()).or_insert_with(|| {
            pending.push(PendingSegment {
                id: id.clone(),
                kind,
                label,
                samples: Vec::new(),
                rows: Vec::new(),
            });
            pending.len() - 1
        });
        let seg = &mut pending[slot];
        if seg.kind != kind || seg.label != label {
            return Err(SensorError::InconsistentSegment { row, id });
        }
        seg.samples.push(sample);
        seg.rows.push(row);
    }

    pending
        .into_iter()
        .map(|p| {
            validate_samples(&p.id, rate_hz, &p.samples, |i| p.rows[i])?;
            Ok(SensorSegment {
                id: p.id,
                kind: p.kind,
                label: p.label,
                rate_hz,
                samples: p.samples,
            })
        })
        .collect()
}

/// Write segments in the CSV schema. Floats use the shortest text form that
/// parses back to the identical `f64`.
pub fn write_segments<W: Write>(writer: W, segments: &[SensorSegment]) -> Result<(), SensorError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_COLUMNS)?;
    for seg in segments {
        for s in &seg.samples {
            let mut rec = vec![
                seg.id.clone(),
                seg.kind.as_str().to_string(),
                seg.label.as_str().to_string(),
            ];
            rec.extend(s.fields().iter().map(|(_, v)| v.to_string()));
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_segments(path: impl AsRef<Path>, segments: &[SensorSegment]) -> Result<(), SensorError> {
    let file = std::fs::File::create(path)?;
    write_segments(std::io::BufWriter::new(file), segments)
}
