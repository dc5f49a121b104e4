//! Orthonormal Haar discrete wavelet transform.
//!
//! One analysis step filters the signal with a low-pass and a high-pass
//! filter under periodic extension and keeps every second output:
//!
//! ```text
//! approx[n] = sum_k low[k]  * x[(2n + k) mod N]
//! detail[n] = sum_k high[k] * x[(2n + k) mod N]
//! ```
//!
//! which is convolution with the time-reversed filter followed by
//! downsampling at the odd phase. With `low = [1, 1]/√2` and
//! `high = [1, -1]/√2` the step is an orthogonal map, so energy is conserved
//! and the inverse is the transpose.
//!
//! An odd-length input is padded with one copy of its last sample before
//! filtering. That padding is not undone exactly by [`reconstruct`] (the
//! padded sample is simply dropped), so perfect reconstruction only holds
//! when every level sees an even length, e.g. lengths that are multiples
//! of 16.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of decomposition levels used for feature extraction.
pub const LEVELS: usize = 4;

/// Shortest signal [`decompose4`] accepts.
pub const MIN_DECOMPOSE_LEN: usize = 1 << LEVELS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveletError {
    #[error("signal is empty")]
    EmptySignal,
    #[error("signal of length {len} is too short for {LEVELS} levels (need {MIN_DECOMPOSE_LEN})")]
    TooShort { len: usize },
    #[error("coefficient lengths do not match an original length of {original_len}")]
    ShapeMismatch { original_len: usize },
    #[error("variance of an empty sequence")]
    EmptyInput,
}

/// Analysis filters of a two-channel filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl FilterPair {
    pub fn haar() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        FilterPair {
            low: vec![h, h],
            high: vec![h, -h],
        }
    }
}

impl Default for FilterPair {
    fn default() -> Self {
        FilterPair::haar()
    }
}

/// Level-4 approximation and the four detail bands of one channel.
/// `d1` is the finest (highest-frequency) band.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DwtDecomposition {
    pub a4: Vec<f64>,
    pub d4: Vec<f64>,
    pub d3: Vec<f64>,
    pub d2: Vec<f64>,
    pub d1: Vec<f64>,
}

impl DwtDecomposition {
    /// Bands in feature order: A4, D4, D3, D2, D1.
    pub fn bands(&self) -> [&[f64]; 5] {
        [&self.a4, &self.d4, &self.d3, &self.d2, &self.d1]
    }

    pub fn energy(&self) -> f64 {
        self.bands()
            .iter()
            .flat_map(|b| b.iter())
            .map(|c| c * c)
            .sum()
    }
}

fn padded_len(len: usize) -> usize {
    len + len % 2
}

/// One analysis level. Returns `(approx, detail)`, each of length
/// `ceil(len / 2)`.
pub fn dwt_step(signal: &[f64], filters: &FilterPair) -> Result<(Vec<f64>, Vec<f64>), WaveletError> {
    let last = *signal.last().ok_or(WaveletError::EmptySignal)?;
    let n = padded_len(signal.len());
    let at = |i: usize| {
        let i = i % n;
        if i < signal.len() {
            signal[i]
        } else {
            last
        }
    };
    let half = n / 2;
    let mut approx = Vec::with_capacity(half);
    let mut detail = Vec::with_capacity(half);
    for m in 0..half {
        let base = 2 * m;
        approx.push(filters.low.iter().enumerate().map(|(k, c)| c * at(base + k)).sum());
        detail.push(filters.high.iter().enumerate().map(|(k, c)| c * at(base + k)).sum());
    }
    Ok((approx, detail))
}

/// Inverse of one analysis level for an even-length output of `2 * len`.
pub fn idwt_step(approx: &[f64], detail: &[f64], filters: &FilterPair) -> Result<Vec<f64>, WaveletError> {
    if approx.len() != detail.len() {
        return Err(WaveletError::ShapeMismatch {
            original_len: 2 * approx.len(),
        });
    }
    let n = 2 * approx.len();
    let mut out = vec![0.0; n];
    for (m, (a, d)) in approx.iter().zip(detail).enumerate() {
        for (k, (l, h)) in filters.low.iter().zip(&filters.high).enumerate() {
            out[(2 * m + k) % n] += l * a + h * d;
        }
    }
    Ok(out)
}

/// Four-level Haar decomposition.
pub fn decompose4(signal: &[f64]) -> Result<DwtDecomposition, WaveletError> {
    if signal.len() < MIN_DECOMPOSE_LEN {
        return Err(WaveletError::TooShort { len: signal.len() });
    }
    let filters = FilterPair::haar();
    let (a1, d1) = dwt_step(signal, &filters)?;
    let (a2, d2) = dwt_step(&a1, &filters)?;
    let (a3, d3) = dwt_step(&a2, &filters)?;
    let (a4, d4) = dwt_step(&a3, &filters)?;
    Ok(DwtDecomposition { a4, d4, d3, d2, d1 })
}

/// Inverse of [`decompose4`], truncated to `original_len` samples.
pub fn reconstruct(dec: &DwtDecomposition, original_len: usize) -> Result<Vec<f64>, WaveletError> {
    let mismatch = WaveletError::ShapeMismatch { original_len };
    // input length seen by each level, finest first
    let mut lens = [0usize; LEVELS];
    let mut len = original_len;
    for slot in &mut lens {
        *slot = len;
        len = padded_len(len) / 2;
    }
    let details = [&dec.d1, &dec.d2, &dec.d3, &dec.d4];
    for (level_len, d) in lens.iter().zip(details) {
        if d.len() != padded_len(*level_len) / 2 {
            return Err(mismatch);
        }
    }
    if dec.a4.len() != dec.d4.len() {
        return Err(mismatch);
    }

    let filters = FilterPair::haar();
    let mut approx = dec.a4.clone();
    for (level_len, d) in lens.iter().zip(details).rev() {
        let mut x = idwt_step(&approx, d, &filters)?;
        x.truncate(*level_len);
        approx = x;
    }
    Ok(approx)
}

pub fn mean(xs: &[f64]) -> Result<f64, WaveletError> {
    if xs.is_empty() {
        return Err(WaveletError::EmptyInput);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Population variance, `sum((x - mean)^2) / n`.
pub fn variance(xs: &[f64]) -> Result<f64, WaveletError> {
    let m = mean(xs)?;
    Ok(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S: f64 = std::f64::consts::SQRT_2;

    /// Periodic convolution with the time-reversed filter, kept at the odd
    /// phase. Written independently of `dwt_step`'s index arithmetic.
    fn convolve_downsample(x: &[f64], filter: &[f64]) -> Vec<f64> {
        let mut x = x.to_vec();
        if x.len() % 2 == 1 {
            x.push(*x.last().unwrap());
        }
        let n = x.len() as isize;
        let rev: Vec<f64> = filter.iter().rev().copied().collect();
        let full: Vec<f64> = (0..n)
            .map(|m| {
                rev.iter()
                    .enumerate()
                    .map(|(j, c)| c * x[(m - j as isize).rem_euclid(n) as usize])
                    .sum()
            })
            .collect();
        // rev has length 2, so output m aligns with input window starting at m - 1
        full.iter().skip(1).step_by(2).copied().collect()
    }

    #[test]
    fn haar_filters_are_orthonormal() {
        let f = FilterPair::haar();
        let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
        assert_abs_diff_eq!(norm(&f.low), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(norm(&f.high), 1.0, epsilon = 1e-12);
        let dot: f64 = f.low.iter().zip(&f.high).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(dot, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_signal_has_no_detail() {
        let (a, d) = dwt_step(&[1.0; 4], &FilterPair::haar()).unwrap();
        assert_abs_diff_eq!(a.as_slice(), [S, S].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(d.as_slice(), [0.0, 0.0].as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn ramp_matches_convolution_oracle() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let f = FilterPair::haar();
        let (a, d) = dwt_step(&x, &f).unwrap();
        let (oa, od) = (convolve_downsample(&x, &f.low), convolve_downsample(&x, &f.high));
        assert_abs_diff_eq!(oa.as_slice(), [3.0 / S, 7.0 / S].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(od.as_slice(), [-1.0 / S, -1.0 / S].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.as_slice(), oa.as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(d.as_slice(), od.as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn single_sample_is_padded() {
        let (a, d) = dwt_step(&[5.0], &FilterPair::haar()).unwrap();
        assert_abs_diff_eq!(a.as_slice(), [5.0 * S].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(d.as_slice(), [0.0].as_slice(), epsilon = 1e-12);
        assert_eq!(dwt_step(&[], &FilterPair::haar()), Err(WaveletError::EmptySignal));
    }

    #[test]
    fn constant_length_32_decomposes_to_scaled_a4() {
        let dec = decompose4(&[2.5; 32]).unwrap();
        assert_eq!(dec.a4.len(), 2);
        assert_abs_diff_eq!(dec.a4.as_slice(), [10.0, 10.0].as_slice(), epsilon = 1e-12);
        for d in [&dec.d4, &dec.d3, &dec.d2, &dec.d1] {
            assert!(d.iter().all(|c| c.abs() < 1e-12));
        }
        assert_eq!((dec.d1.len(), dec.d2.len(), dec.d3.len(), dec.d4.len()), (16, 8, 4, 2));
    }

    #[test]
    fn length_17_follows_parity_rule() {
        let x: Vec<f64> = (0..17).map(|i| (i as f64 * 0.7).cos()).collect();
        let dec = decompose4(&x).unwrap();
        assert_eq!((dec.d1.len(), dec.d2.len(), dec.d3.len(), dec.d4.len(), dec.a4.len()), (9, 5, 3, 2, 2));
        // step-by-step oracle
        let f = FilterPair::haar();
        let mut a = x.clone();
        let mut details = Vec::new();
        for _ in 0..4 {
            details.push(convolve_downsample(&a, &f.high));
            a = convolve_downsample(&a, &f.low);
        }
        assert_abs_diff_eq!(dec.a4.as_slice(), a.as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(dec.d1.as_slice(), details[0].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(dec.d4.as_slice(), details[3].as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn too_short_for_four_levels() {
        assert_eq!(decompose4(&[0.0; 15]), Err(WaveletError::TooShort { len: 15 }));
    }

    #[test]
    fn white_noise_conserves_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dec = decompose4(&x).unwrap();
        let e: f64 = x.iter().map(|v| v * v).sum();
        assert!((dec.energy() - e).abs() / e < 1e-9);
    }

    #[test]
    fn reconstruct_ramp_16() {
        let x: Vec<f64> = (1..=16).map(f64::from).collect();
        let back = reconstruct(&decompose4(&x).unwrap(), 16).unwrap();
        assert_abs_diff_eq!(back.as_slice(), x.as_slice(), epsilon = 1e-9);
    }

    #[test]
    fn reconstruct_zero_decomposition() {
        let dec = decompose4(&[0.0; 64]).unwrap();
        assert!(reconstruct(&dec, 64).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reconstruct_rejects_wrong_shape() {
        let dec = decompose4(&[1.0; 32]).unwrap();
        assert_eq!(reconstruct(&dec, 64), Err(WaveletError::ShapeMismatch { original_len: 64 }));
    }

    #[test]
    fn reconstruct_random_length_64() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..64).map(|_| rng.random_range(-10.0..10.0)).collect();
            let back = reconstruct(&decompose4(&x).unwrap(), 64).unwrap();
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn odd_length_reconstruction_keeps_length() {
        let x: Vec<f64> = (0..17).map(f64::from).collect();
        let back = reconstruct(&decompose4(&x).unwrap(), 17).unwrap();
        assert_eq!(back.len(), 17);
    }

    #[test]
    fn variance_examples() {
        assert_eq!(variance(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(variance(&[0.0, 2.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(variance(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.25, epsilon = 1e-15);
        assert_eq!(variance(&[]), Err(WaveletError::EmptyInput));
    }

    fn signal(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, len)
    }

    proptest! {
        #[test]
        fn step_is_linear(x in prop::collection::vec(-1.0f64..1.0, 24), y in prop::collection::vec(-1.0f64..1.0, 24), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let f = FilterPair::haar();
            let mix: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let (am, dm) = dwt_step(&mix, &f).unwrap();
            let (ax, dx) = dwt_step(&x, &f).unwrap();
            let (ay, dy) = dwt_step(&y, &f).unwrap();
            for i in 0..am.len() {
                prop_assert!((am[i] - (alpha * ax[i] + beta * ay[i])).abs() < 1e-12);
                prop_assert!((dm[i] - (alpha * dx[i] + beta * dy[i])).abs() < 1e-12);
            }
        }

        #[test]
        fn constant_offset_only_moves_a4(k in 1usize..5, x in signal(80), c in -50.0f64..50.0) {
            let x = &x[..16 * k];
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            let (d0, d1) = (decompose4(x).unwrap(), decompose4(&shifted).unwrap());
            for (p, q) in [(&d0.d1, &d1.d1), (&d0.d2, &d1.d2), (&d0.d3, &d1.d3), (&d0.d4, &d1.d4)] {
                for (u, v) in p.iter().zip(q) {
                    prop_assert!((u - v).abs() < 1e-9);
                }
            }
        }
    }
}
