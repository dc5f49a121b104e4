//! Safe/dangerous classification of driving maneuvers from 20 Hz
//! smartphone accelerometer and gyroscope traces.
//!
//! The pipeline runs from raw segments ([`sensor`]) through Haar wavelet
//! features ([`wavelet`], [`features`]) or two-Gaussian fit parameters
//! ([`gaussfit`]), optional NCA feature weighting ([`selection`]) and the
//! MLP, RBF and SVM classifiers of [`learners`]. Braking and acceleration
//! maneuvers are judged by a fixed threshold rule instead ([`rules`]).
//! [`synth`] generates seeded labeled corpora and [`experiment`] ties the
//! stages together.

pub mod dataset;
pub mod experiment;
pub mod features;
pub mod gaussfit;
pub mod learners;
pub mod rules;
pub mod selection;
pub mod sensor;
pub mod synth;
pub mod wavelet;

use thiserror::Error;

/// Any pipeline error, tagged with the module that raised it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sensor: {0}")]
    Sensor(#[from] sensor::SensorError),
    #[error("wavelet: {0}")]
    Wavelet(#[from] wavelet::WaveletError),
    #[error("features: {0}")]
    Features(#[from] features::FeatureError),
    #[error("dataset: {0}")]
    Dataset(#[from] dataset::DatasetError),
    #[error("selection: {0}")]
    Selection(#[from] selection::SelectionError),
    #[error("learners: {0}")]
    Learners(#[from] learners::LearnerError),
    #[error("rules: {0}")]
    Rules(#[from] rules::RuleError),
    #[error("gaussfit: {0}")]
    GaussFit(#[from] gaussfit::GaussFitError),
    #[error("synth: {0}")]
    Synth(#[from] synth::SynthError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

// variant name of a derived Debug rendering: `Foo { .. }` or `Foo(..)` -> `Foo`
fn variant_name(debug: &str) -> &str {
    let end = debug.find(['(', ' ', '{']).unwrap_or(debug.len());
    &debug[..end]
}

impl Error {
    /// Module-qualified error code such as `sensor.NonMonotoneTime`.
    pub fn code(&self) -> String {
        let (module, inner) = match self {
            Error::Sensor(e) => ("sensor", format!("{e:?}")),
            Error::Wavelet(e) => ("wavelet", format!("{e:?}")),
            Error::Features(e) => ("features", format!("{e:?}")),
            Error::Dataset(e) => ("dataset", format!("{e:?}")),
            Error::Selection(e) => ("selection", format!("{e:?}")),
            Error::Learners(e) => ("learners", format!("{e:?}")),
            Error::Rules(e) => ("rules", format!("{e:?}")),
            Error::GaussFit(e) => ("gaussfit", format!("{e:?}")),
            Error::Synth(e) => ("synth", format!("{e:?}")),
            Error::Config(_) => return "cli.Config".into(),
            Error::Io(_) => return "cli.Io".into(),
        };
        format!("{module}.{}", variant_name(&inner))
    }

    /// Process exit status: 4 for I/O failures, 2 for everything else.
    /// Non-convergence (3) is not an error; results are still written.
    pub fn exit_code(&self) -> i32 {
        let io = matches!(
            self,
            Error::Io(_)
                | Error::Sensor(sensor::SensorError::Io(_))
                | Error::Features(features::FeatureError::Io(_))
        );
        if io {
            4
        } else {
            2
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
