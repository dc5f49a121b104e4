//! Threshold rule for braking and gas maneuvers.
//!
//! The change in longitudinal acceleration is measured as `max(ax) - min(ax)`
//! inside a sliding window (3 s by default); the worst window decides. The
//! default thresholds are 0.11 g and 0.45 g. Gas maneuvers use the same
//! thresholds as braking.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor::{Label, ManeuverKind, SensorSegment};

/// Standard gravity in m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

// absorbs rounding in timestamps built as i / rate
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("segment lasts {duration} s, shorter than the {window} s window")]
    WindowTooLong { duration: f64, window: f64 },
    #[error("rule applies to brake and gas maneuvers, not {0}")]
    WrongKind(ManeuverKind),
    #[error("invalid thresholds: {0}")]
    BadThresholds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakeThresholds {
    /// Changes at or below this are very safe (m/s²).
    pub very_safe: f64,
    /// Changes strictly above this are dangerous (m/s²).
    pub dangerous: f64,
    pub window_s: f64,
}

impl Default for BrakeThresholds {
    fn default() -> Self {
        BrakeThresholds {
            very_safe: 0.11 * STANDARD_GRAVITY,
            dangerous: 0.45 * STANDARD_GRAVITY,
            window_s: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    VerySafe,
    Safe,
    Dangerous,
}

impl Severity {
    /// Very safe and safe both count as `Safe` for classifier comparisons.
    pub fn label(self) -> Label {
        match self {
            Severity::VerySafe | Severity::Safe => Label::Safe,
            Severity::Dangerous => Label::Dangerous,
        }
    }

    pub fn from_delta(delta_a: f64, th: &BrakeThresholds) -> Self {
        if delta_a <= th.very_safe {
            Severity::VerySafe
        } else if delta_a > th.dangerous {
            Severity::Dangerous
        } else {
            Severity::Safe
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakeVerdict {
    /// Largest in-window `max(ax) - min(ax)`, m/s².
    pub delta_a: f64,
    pub severity: Severity,
    /// Start and end time of the worst window, seconds.
    pub window: (f64, f64),
}

pub fn classify_braking(segment: &SensorSegment, th: &BrakeThresholds) -> Result<BrakeVerdict, RuleError> {
    if !matches!(segment.kind(), ManeuverKind::Brake | ManeuverKind::Gas) {
        return Err(RuleError::WrongKind(segment.kind()));
    }
    if !(th.window_s > 0.0 && th.very_safe >= 0.0 && th.dangerous >= th.very_safe) {
        return Err(RuleError::BadThresholds(format!("{th:?}")));
    }
    let duration = segment.duration();
    if duration + TIME_EPS < th.window_s {
        return Err(RuleError::WindowTooLong {
            duration,
            window: th.window_s,
        });
    }

    let samples = segment.samples();
    let t_last = samples[samples.len() - 1].t;
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut end = 0;
    for (start, s) in samples.iter().enumerate() {
        let t_end = s.t + th.window_s;
        if t_end > t_last + TIME_EPS {
            break;
        }
        end = end.max(start);
        while end + 1 < samples.len() && samples[end + 1].t <= t_end + TIME_EPS {
            end += 1;
        }
        let (lo, hi) = samples[start..=end]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x.ax), hi.max(x.ax)));
        if hi - lo > best.0 {
            best = (hi - lo, s.t);
        }
    }
    let (delta_a, t_start) = best;
    Ok(BrakeVerdict {
        delta_a,
        severity: Severity::from_delta(delta_a, th),
        window: (t_start, t_start + th.window_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::SensorSample;
    use proptest::prelude::*;

    fn brake(ax: impl Fn(f64) -> f64, n: usize, t0: f64) -> SensorSegment {
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / 20.0;
                SensorSample {
                    t: t0 + t,
                    ax: ax(t),
                    ..Default::default()
                }
            })
            .collect();
        SensorSegment::new("b", ManeuverKind::Brake, Label::Unlabeled, 20.0, samples).unwrap()
    }

    fn verdict(seg: &SensorSegment) -> BrakeVerdict {
        classify_braking(seg, &BrakeThresholds::default()).unwrap()
    }

    #[test]
    fn smooth_ramp_under_one_g_tenth_is_very_safe() {
        let v = verdict(&brake(|t| -0.3 * t.min(3.0), 81, 0.0));
        assert!((v.delta_a - 0.9).abs() < 1e-12);
        assert_eq!(v.severity, Severity::VerySafe);
    }

    #[test]
    fn five_ms2_step_is_dangerous() {
        let v = verdict(&brake(|t| if t < 1.5 { 0.0 } else { -5.0 }, 100, 0.0));
        assert_eq!(v.delta_a, 5.0);
        assert_eq!(v.severity, Severity::Dangerous);
        assert_eq!(v.severity.label(), Label::Dangerous);
    }

    #[test]
    fn three_ms2_is_safe() {
        let v = verdict(&brake(|t| if t < 2.0 { 0.0 } else { -3.0 }, 80, 0.0));
        assert_eq!(v.severity, Severity::Safe);
        assert_eq!(v.severity.label(), Label::Safe);
    }

    #[test]
    fn exact_boundaries() {
        let th = BrakeThresholds::default();
        let at = |d: f64| verdict(&brake(move |t| if t < 1.0 { 0.0 } else { d }, 70, 0.0));
        let vs = at(th.very_safe);
        assert_eq!(vs.delta_a, th.very_safe);
        assert_eq!(vs.severity, Severity::VerySafe);
        let d = at(th.dangerous);
        assert_eq!(d.delta_a, th.dangerous);
        assert_eq!(d.severity, Severity::Safe);
    }

    #[test]
    fn window_only_sees_three_seconds() {
        // a slow drift of 6 m/s² over 10 s never exceeds 1.8 m/s² per window
        let v = verdict(&brake(|t| -0.6 * t, 201, 0.0));
        assert!((v.delta_a - 1.8).abs() < 1e-9);
        assert_eq!(v.severity, Severity::Safe);
    }

    #[test]
    fn errors() {
        let short = brake(|_| 0.0, 40, 0.0);
        assert!(matches!(
            classify_braking(&short, &BrakeThresholds::default()),
            Err(RuleError::WindowTooLong { .. })
        ));
        let turn = SensorSegment::new(
            "t",
            ManeuverKind::Turn,
            Label::Safe,
            20.0,
            brake(|_| 0.0, 80, 0.0).samples().to_vec(),
        )
        .unwrap();
        assert_eq!(
            classify_braking(&turn, &BrakeThresholds::default()),
            Err(RuleError::WrongKind(ManeuverKind::Turn))
        );
    }

    fn rank(s: Severity) -> u8 {
        match s {
            Severity::VerySafe => 0,
            Severity::Safe => 1,
            Severity::Dangerous => 2,
        }
    }

    proptest! {
        #[test]
        fn scaling_up_never_lowers_severity(vals in prop::collection::vec(-3.0f64..3.0, 61..120), alpha in 1.0f64..4.0) {
            let n = vals.len();
            let base = brake(|t| vals[(t * 20.0).round() as usize], n, 0.0);
            let scaled = brake(|t| alpha * vals[(t * 20.0).round() as usize], n, 0.0);
            prop_assert!(rank(verdict(&scaled).severity) >= rank(verdict(&base).severity));
        }

        #[test]
        fn time_shift_keeps_verdict(vals in prop::collection::vec(-6.0f64..6.0, 61..120), t0 in -50.0f64..50.0) {
            let n = vals.len();
            let base = brake(|t| vals[(t * 20.0).round() as usize], n, 0.0);
            let shifted = base.shifted(t0);
            let (a, b) = (verdict(&base), verdict(&shifted));
            prop_assert_eq!(a.severity, b.severity);
            prop_assert!((a.delta_a - b.delta_a).abs() < 1e-12);
        }
    }
}
