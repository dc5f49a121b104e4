//! Two-Gaussian regression of a maneuver's steering signal.
//!
//! The model is `a1·exp(-(x-b1)²/(2c1²)) + a2·exp(-(x-b2)²/(2c2²))`, fitted
//! by Levenberg-Marquardt with widths optimized as `ln c`. The six fitted
//! parameters serve as a compact alternative to the wavelet features.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureRow, FeatureTable};
use crate::sensor::{Channel, SensorSegment};

/// Column names of the Gaussian feature vector, centers relative to the
/// segment start.
pub const GAUSS_FEATURE_NAMES: [&str; 6] = ["a1", "b1", "c1", "a2", "b2", "c2"];

/// Twice the parameter count.
pub const MIN_FIT_SAMPLES: usize = 12;

pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-10;

// damping beyond which no step can make progress in double precision
const MAX_DAMPING: f64 = 1e16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussFitError {
    #[error("width must be positive, got c1={c1}, c2={c2}")]
    NonPositiveWidth { c1: f64, c2: f64 },
    #[error("{got} samples, at least {MIN_FIT_SAMPLES} are required")]
    TooFewSamples { got: usize },
    #[error("{ts} time stamps but {ys} values")]
    LengthMismatch { ts: usize, ys: usize },
    #[error("time stamps must strictly increase (index {index})")]
    NonMonotoneTime { index: usize },
    #[error("non-finite input at index {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPair {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    pub rmse: f64,
}

impl GaussianPair {
    pub fn new(p: [f64; 6]) -> Self {
        GaussianPair {
            a1: p[0],
            b1: p[1],
            c1: p[2],
            a2: p[3],
            b2: p[4],
            c2: p[5],
            rmse: 0.0,
        }
    }

    pub fn params(&self) -> [f64; 6] {
        [self.a1, self.b1, self.c1, self.a2, self.b2, self.c2]
    }

    /// Order the components by center, then width, then amplitude.
    pub fn canonical(self) -> Self {
        let first = (self.b1, self.c1, self.a1);
        let second = (self.b2, self.c2, self.a2);
        let swap = second
            .0
            .total_cmp(&first.0)
            .then(second.1.total_cmp(&first.1))
            .then(second.2.total_cmp(&first.2))
            .is_lt();
        if swap {
            GaussianPair {
                a1: self.a2,
                b1: self.b2,
                c1: self.c2,
                a2: self.a1,
                b2: self.b1,
                c2: self.c1,
                rmse: self.rmse,
            }
        } else {
            self
        }
    }

    fn check_widths(&self) -> Result<(), GaussFitError> {
        if self.c1 > 0.0 && self.c2 > 0.0 {
            Ok(())
        } else {
            Err(GaussFitError::NonPositiveWidth { c1: self.c1, c2: self.c2 })
        }
    }
}

fn bump(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let z = (x - b) / c;
    a * (-0.5 * z * z).exp()
}

pub fn eval_two_gaussians(p: &GaussianPair, x: f64) -> Result<f64, GaussFitError> {
    p.check_widths()?;
    Ok(bump(p.a1, p.b1, p.c1, x) + bump(p.a2, p.b2, p.c2, x))
}

/// Partial derivatives of the model at `x` with respect to
/// `(a1, b1, c1, a2, b2, c2)`.
pub fn jacobian_row(p: &GaussianPair, x: f64) -> Result<[f64; 6], GaussFitError> {
    p.check_widths()?;
    let part = |a: f64, b: f64, c: f64| {
        let g = bump(1.0, b, c, x);
        let d = x - b;
        [g, a * g * d / (c * c), a * g * d * d / (c * c * c)]
    };
    let [g1, db1, dc1] = part(p.a1, p.b1, p.c1);
    let [g2, db2, dc2] = part(p.a2, p.b2, p.c2);
    Ok([g1, db1, dc1, g2, db2, dc2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub pair: GaussianPair,
    /// Sum of squared residuals after every accepted step, starting with
    /// the initial guess.
    pub sse_trace: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration budget ran out or the normal equations
    /// became singular; `pair` is then the best point found.
    pub converged: bool,
}

// optimization vector: (a1, b1, ln c1, a2, b2, ln c2)
fn unpack(theta: &[f64; 6]) -> GaussianPair {
    GaussianPair::new([theta[0], theta[1], theta[2].exp(), theta[3], theta[4], theta[5].exp()])
}

fn sse(theta: &[f64; 6], ts: &[f64], ys: &[f64]) -> f64 {
    let p = unpack(theta);
    ts.iter()
        .zip(ys)
        .map(|(&t, &y)| {
            let r = y - (bump(p.a1, p.b1, p.c1, t) + bump(p.a2, p.b2, p.c2, t));
            r * r
        })
        .sum()
}

/// Starting point: centers at the two largest-magnitude local extrema that
/// are at least a tenth of the span apart, amplitudes at those values and
/// widths of a sixth of the span.
pub fn initial_guess(ts: &[f64], ys: &[f64]) -> GaussianPair {
    let n = ys.len();
    let span = ts[n - 1] - ts[0];
    let min_sep = span / 10.0;
    let mag = |i: usize| ys[i].abs();
    let mut extrema: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || mag(i) >= mag(i - 1);
            let right = i + 1 == n || mag(i) >= mag(i + 1);
            left && right
        })
        .collect();
    let mut all: Vec<usize> = (0..n).collect();
    for list in [&mut extrema, &mut all] {
        list.sort_by(|&i, &j| mag(j).total_cmp(&mag(i)).then(i.cmp(&j)));
    }

    let first = extrema[0];
    let far_enough = |&&j: &&usize| (ts[j] - ts[first]).abs() >= min_sep;
    let second = extrema
        .iter()
        .find(far_enough)
        .or_else(|| all.iter().find(far_enough))
        .copied()
        .unwrap_or(if first == 0 { n - 1 } else { 0 });
    let c = span / 6.0;
    GaussianPair::new([ys[first], ts[first], c, ys[second], ts[second], c])
}

fn validate(ts: &[f64], ys: &[f64]) -> Result<(), GaussFitError> {
    if ts.len() != ys.len() {
        return Err(GaussFitError::LengthMismatch {
            ts: ts.len(),
            ys: ys.len(),
        });
    }
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(GaussFitError::TooFewSamples { got: ts.len() });
    }
    if let Some(index) = ts.iter().zip(ys).position(|(t, y)| !t.is_finite() || !y.is_finite()) {
        return Err(GaussFitError::NonFinite { index });
    }
    if let Some(index) = ts.windows(2).position(|w| w[1] <= w[0]) {
        return Err(GaussFitError::NonMonotoneTime { index: index + 1 });
    }
    Ok(())
}

/// Levenberg-Marquardt fit. A step solves `(JᵀJ + μI)δ = Jᵀr` and is taken
/// only if it does not increase the squared error, so the trace is
/// nonincreasing. Stops once the relative decrease of an accepted step
/// falls below `tol`.
pub fn fit_two_gaussians(ts: &[f64], ys: &[f64], max_iters: usize, tol: f64) -> Result<GaussianFit, GaussFitError> {
    validate(ts, ys)?;
    let init = initial_guess(ts, ys);
    let mut theta = [init.a1, init.b1, init.c1.ln(), init.a2, init.b2, init.c2.ln()];
    let mut current = sse(&theta, ts, ys);
    let mut trace = vec![current];
    // below this the fit is exact to rounding
    let floor = 1e-30 * ys.iter().map(|y| y * y).sum::<f64>().max(1e-300);
    let mut mu: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        if current <= floor {
            converged = true;
            break;
        }
        iterations += 1;
        let p = unpack(&theta);
        let mut jtj = DMatrix::<f64>::zeros(6, 6);
        let mut jtr = DVector::<f64>::zeros(6);
        for (&t, &y) in ts.iter().zip(ys) {
            let mut row = jacobian_row(&p, t).expect("widths are exponentials");
            // chain rule for ln c
            row[2] *= p.c1;
            row[5] *= p.c2;
            let r = y - (bump(p.a1, p.b1, p.c1, t) + bump(p.a2, p.b2, p.c2, t));
            for i in 0..6 {
                jtr[i] += row[i] * r;
                for j in 0..6 {
                    jtj[(i, j)] += row[i] * row[j];
                }
            }
        }
        let damping = *mu.get_or_insert_with(|| 1e-3 * (0..6).map(|i| jtj[(i, i)]).fold(1e-12, f64::max));

        let mut system = jtj.clone();
        for i in 0..6 {
            system[(i, i)] += damping;
        }
        let step = system.cholesky().map(|ch| ch.solve(&jtr));
        let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) else {
            log::warn!("singular normal equations after {iterations} iterations; keeping best point");
            break;
        };
        let mut candidate = theta;
        for i in 0..6 {
            candidate[i] += step[i];
        }
        let next = sse(&candidate, ts, ys);
        if next.is_finite() && next <= current {
            let rel = (current - next) / current.max(f64::MIN_POSITIVE);
            theta = candidate;
            current = next;
            trace.push(current);
            mu = Some(damping / 10.0);
            if rel < tol {
                converged = true;
                break;
            }
        } else {
            let grown = damping * 10.0;
            if grown > MAX_DAMPING {
                // no descent direction left at machine precision
                converged = true;
                break;
            }
            mu = Some(grown);
        }
    }

    let mut pair = unpack(&theta);
    pair.rmse = (current / ts.len() as f64).sqrt();
    Ok(GaussianFit {
        pair: pair.canonical(),
        sse_trace: trace,
        iterations,
        converged,
    })
}

/// Endpoint baseline: mean of the first and last 5% of the signal (at
/// least one sample each). A maneuver starts and ends at rest, so this is
/// the sensor offset.
pub fn endpoint_baseline(ys: &[f64]) -> f64 {
    let k = (ys.len() / 20).max(1);
    let head = ys[..k].iter().sum::<f64>();
    let tail = ys[ys.len() - k..].iter().sum::<f64>();
    (head + tail) / (2 * k) as f64
}

/// Fit the yaw-rate channel of `segment` after removing its endpoint
/// baseline. Times are measured from the first sample, so the result does
/// not depend on where the segment sits on the clock.
pub fn fit_segment(segment: &SensorSegment) -> Result<GaussianFit, GaussFitError> {
    let t0 = segment.start_time();
    let ts: Vec<f64> = segment.times().iter().map(|t| t - t0).collect();
    let gz = segment.channel(Channel::Gz);
    let base = endpoint_baseline(&gz);
    let ys: Vec<f64> = gz.iter().map(|v| v - base).collect();
    fit_two_gaussians(&ts, &ys, DEFAULT_MAX_ITERS, DEFAULT_TOL)
}

/// `(a1, b1 - t0, c1, a2, b2 - t0, c2)` of the fitted yaw-rate signal.
pub fn gauss_features(segment: &SensorSegment) -> Result<[f64; 6], GaussFitError> {
    Ok(fit_segment(segment)?.pair.params())
}

/// Gaussian feature table of a corpus. The second value counts fits that
/// did not converge.
pub fn feature_table(segments: &[SensorSegment]) -> Result<(FeatureTable, usize), GaussFitError> {
    let mut unconverged = 0;
    let mut rows = Vec::with_capacity(segments.len());
    for s in segments {
        let fit = fit_segment(s)?;
        if !fit.converged {
            log::warn!("segment {}: Gaussian fit did not converge", s.id());
            unconverged += 1;
        }
        rows.push(FeatureRow {
            segment_id: s.id().to_string(),
            label: s.label(),
            values: fit.pair.params().to_vec(),
        });
    }
    let names = GAUSS_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    Ok((FeatureTable { names, rows }, unconverged))
}
