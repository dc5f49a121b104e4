//! Seeded synthetic maneuvers.
//!
//! Shapes are analytic envelopes so downstream tests have closed forms:
//!
//! * turn / U-turn: one Gaussian bump on `gz`, with a matching lateral
//!   acceleration bump on `ay`;
//! * lane change: two opposite-sign bumps on `gz` and `ay`;
//! * brake / gas: a logistic step on `ax`, negative for braking.
//!
//! `az` sits at standard gravity. Every channel gets white Gaussian noise.
//! Dangerous maneuvers are shorter and sharper than safe ones; the default
//! ranges live in [`DEFAULT_RANGES`].

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::STANDARD_GRAVITY;
use crate::sensor::{Label, ManeuverKind, SensorSample, SensorSegment, MIN_SEGMENT_LEN, NOMINAL_RATE_HZ};

pub const DEFAULT_NOISE_STD: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("{duration_s} s at 20 Hz gives {samples} samples, at least {MIN_SEGMENT_LEN} are required")]
    TooShortSpec { duration_s: f64, samples: usize },
    #[error("invalid scenario: {0}")]
    BadSpec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ManeuverKind,
    pub label: Label,
    pub duration_s: f64,
    /// Peak yaw rate, rad/s.
    pub gz_amplitude: f64,
    /// Peak lateral acceleration, m/s².
    pub ay_amplitude: f64,
    /// Longitudinal step height, m/s².
    pub ax_amplitude: f64,
    pub noise_std: f64,
    pub seed: u64,
}

/// Inclusive-exclusive range of a drawn quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span(pub f64, pub f64);

impl Span {
    fn draw(self, rng: &mut impl Rng) -> f64 {
        rng.random_range(self.0..self.1)
    }
}

/// Jitter ranges of one maneuver kind and class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRanges {
    pub duration_s: Span,
    pub gz: Span,
    pub ay: Span,
    pub ax: Span,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindRanges {
    pub kind: ManeuverKind,
    pub safe: ClassRanges,
    pub dangerous: ClassRanges,
}

const fn class(duration_s: Span, gz: Span, ay: Span, ax: Span) -> ClassRanges {
    ClassRanges { duration_s, gz, ay, ax }
}

const NONE: Span = Span(0.0, 0.0);

/// Default generator ranges. Within a kind, dangerous durations lie wholly
/// below the safe ones and dangerous amplitudes wholly above, at roughly
/// twice the safe peak. Braking segments stay over 3 s so the braking rule
/// window fits, and only dangerous steps exceed its 0.45 g threshold.
pub const DEFAULT_RANGES: [KindRanges; 5] = [
    KindRanges {
        kind: ManeuverKind::Turn,
        safe: class(Span(3.0, 6.0), Span(0.30, 0.50), Span(1.5, 2.5), NONE),
        dangerous: class(Span(1.0, 2.5), Span(0.60, 1.00), Span(3.0, 5.0), NONE),
    },
    KindRanges {
        kind: ManeuverKind::UTurn,
        safe: class(Span(6.0, 10.0), Span(0.50, 0.70), Span(2.0, 3.0), NONE),
        dangerous: class(Span(3.0, 5.0), Span(1.00, 1.40), Span(4.0, 6.0), NONE),
    },
    KindRanges {
        kind: ManeuverKind::LaneChange,
        safe: class(Span(4.0, 7.0), Span(0.25, 0.40), Span(0.5, 0.9), NONE),
        dangerous: class(Span(1.5, 3.0), Span(0.50, 0.80), Span(1.0, 2.0), NONE),
    },
    KindRanges {
        kind: ManeuverKind::Brake,
        safe: class(Span(4.0, 6.0), NONE, NONE, Span(1.5, 4.0)),
        dangerous: class(Span(3.2, 3.9), NONE, NONE, Span(5.0, 7.0)),
    },
    KindRanges {
        kind: ManeuverKind::Gas,
        safe: class(Span(4.0, 6.0), NONE, NONE, Span(1.0, 3.5)),
        dangerous: class(Span(3.2, 3.9), NONE, NONE, Span(4.8, 6.5)),
    },
];

pub fn ranges_for(kind: ManeuverKind, label: Label) -> ClassRanges {
    let k = DEFAULT_RANGES.iter().find(|r| r.kind == kind).expect("every kind has ranges");
    if label.is_positive() {
        k.dangerous
    } else {
        k.safe
    }
}

pub fn sample_count(duration_s: f64) -> usize {
    (duration_s * NOMINAL_RATE_HZ).round() as usize
}

fn gaussian(t: f64, center: f64, width: f64) -> f64 {
    let z = (t - center) / width;
    (-0.5 * z * z).exp()
}

/// Noise-free channel values `(ax, ay, gz)` at time `t`.
fn envelope(spec: &ScenarioSpec, t: f64) -> (f64, f64, f64) {
    let d = spec.duration_s;
    match spec.kind {
        ManeuverKind::Turn | ManeuverKind::UTurn => {
            let width = if spec.kind == ManeuverKind::Turn { d / 6.0 } else { d / 4.5 };
            let g = gaussian(t, d / 2.0, width);
            (0.0, spec.ay_amplitude * g, spec.gz_amplitude * g)
        }
        ManeuverKind::LaneChange => {
            let width = d / 10.0;
            let s = gaussian(t, d / 3.0, width) - gaussian(t, 2.0 * d / 3.0, width);
            (0.0, spec.ay_amplitude * s, spec.gz_amplitude * s)
        }
        ManeuverKind::Brake | ManeuverKind::Gas => {
            let sign = if spec.kind == ManeuverKind::Brake { -1.0 } else { 1.0 };
            let tau = (d / 20.0).min(0.3);
            let step = 1.0 / (1.0 + (-(t - d / 2.0) / tau).exp());
            (sign * spec.ax_amplitude * step, 0.0, 0.0)
        }
    }
}

pub fn generate(spec: &ScenarioSpec) -> Result<SensorSegment, SynthError> {
    let n = sample_count(spec.duration_s);
    if !spec.duration_s.is_finite() || n < MIN_SEGMENT_LEN {
        return Err(SynthError::TooShortSpec {
            duration_s: spec.duration_s,
            samples: n,
        });
    }
    let amps = [spec.gz_amplitude, spec.ay_amplitude, spec.ax_amplitude];
    if amps.iter().any(|a| !a.is_finite()) {
        return Err(SynthError::BadSpec("amplitudes must be finite".into()));
    }
    if spec.noise_std.is_nan() || spec.noise_std < 0.0 {
        return Err(SynthError::BadSpec(format!("noise_std {} must be >= 0", spec.noise_std)));
    }
    let noise = Normal::new(0.0, spec.noise_std)
        .map_err(|_| SynthError::BadSpec(format!("noise_std {} must be finite and >= 0", spec.noise_std)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut jitter = || noise.sample(&mut rng);
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / NOMINAL_RATE_HZ;
            let (ax, ay, gz) = envelope(spec, t);
            SensorSample {
                t,
                ax: ax + jitter(),
                ay: ay + jitter(),
                az: STANDARD_GRAVITY + jitter(),
                gx: jitter(),
                gy: jitter(),
                gz: gz + jitter(),
            }
        })
        .collect();
    let id = format!("{}-{}-{:016x}", spec.kind, spec.label, spec.seed);
    SensorSegment::new(id, spec.kind, spec.label, NOMINAL_RATE_HZ, samples)
        .map_err(|e| SynthError::BadSpec(e.to_string()))
}

/// Draw a scenario from the default ranges of `kind` and `label`.
pub fn draw_spec(kind: ManeuverKind, label: Label, rng: &mut ChaCha8Rng) -> ScenarioSpec {
    let r = ranges_for(kind, label);
    ScenarioSpec {
        kind,
        label,
        duration_s: r.duration_s.draw(rng),
        gz_amplitude: if r.gz == NONE { 0.0 } else { r.gz.draw(rng) },
        ay_amplitude: if r.ay == NONE { 0.0 } else { r.ay.draw(rng) },
        ax_amplitude: if r.ax == NONE { 0.0 } else { r.ax.draw(rng) },
        noise_std: DEFAULT_NOISE_STD,
        seed: rng.next_u64(),
    }
}

/// `n_per_class` safe then `n_per_class` dangerous segments. Member `i`
/// draws from its own stream of the master seed, so any member can be
/// regenerated alone.
pub fn generate_corpus(kind: ManeuverKind, n_per_class: usize, master_seed: u64) -> Vec<SensorSegment> {
    (0..2 * n_per_class)
        .map(|i| {
            let label = if i < n_per_class { Label::Safe } else { Label::Dangerous };
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(i as u64);
            let spec = draw_spec(kind, label, &mut rng);
            let seg = generate(&spec).expect("default ranges produce valid specs");
            let id = format!("{}-{:04}", kind, i);
            SensorSegment::new(id, kind, label, NOMINAL_RATE_HZ, seg.samples().to_vec())
                .expect("generated samples already validated")
        })
        .collect()
}
