//! NRZ impulse placement and root-raised-cosine pulse shaping.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellations::{Constellation, SymbolSequence};
use crate::error::{Error, Result};

/// Filter half-length in symbols.
pub const DEFAULT_SPAN: usize = 8;

/// Meta key under which [`shape`] records its power-normalization gain.
pub const SHAPE_GAIN_KEY: &str = "shape_gain";

/// Complex baseband samples with sample-rate bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqFrame {
    pub samples: Vec<Complex64>,
    /// Samples per symbol.
    pub sps: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, f64>,
}

impl IqFrame {
    pub fn new(samples: Vec<Complex64>, sps: usize) -> Self {
        IqFrame {
            samples,
            sps,
            meta: BTreeMap::new(),
        }
    }

    pub fn zeros(len: usize, sps: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sps)
    }

    pub fn from_iq(i: &[f64], q: &[f64], sps: usize) -> Result<Self> {
        if i.len() != q.len() {
            return Err(Error::LengthMismatch {
                expected: i.len(),
                actual: q.len(),
            });
        }
        Ok(Self::new(
            i.iter()
                .zip(q)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
            sps,
        ))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn i(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn q(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.im).collect()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Zero-pads (or truncates) to exactly `len` samples.
    pub fn resized(mut self, len: usize) -> Self {
        self.samples.resize(len, Complex64::new(0.0, 0.0));
        self
    }

    pub fn scaled(&self, a: f64) -> Self {
        IqFrame {
            samples: self.samples.iter().map(|z| z * a).collect(),
            sps: self.sps,
            meta: self.meta.clone(),
        }
    }

    /// Rounds every component to the nearest `f32`, the on-disk precision.
    pub fn quantized_f32(mut self) -> Self {
        for z in &mut self.samples {
            *z = Complex64::new(z.re as f32 as f64, z.im as f32 as f64);
        }
        self
    }
}

/// Sampled root-raised-cosine pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub beta: f64,
    pub sps: usize,
    pub span: usize,
    /// `2 * span * sps + 1` taps with unit energy, so the self-convolution
    /// peaks at exactly 1.
    pub taps: Vec<f64>,
}

impl PulseShape {
    /// Index of the center tap; also the filter's group delay in samples.
    pub fn center(&self) -> usize {
        self.span * self.sps
    }

    /// Autocorrelation of the taps at `lag` samples (the raised-cosine pulse).
    pub fn autocorrelation(&self, lag: usize) -> f64 {
        if lag >= self.taps.len() {
            return 0.0;
        }
        self.taps[lag..]
            .iter()
            .zip(&self.taps)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Unnormalized RRC impulse response at `t` symbol periods (`Ts = 1`).
///
/// `t = 0` and `|t| = 1/(4 beta)` use the analytic limits.
pub fn rrc_impulse(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let x = 4.0 * beta * t;
    if (1.0 - x * x).abs() < 1e-10 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    ((PI * t * (1.0 - beta)).sin() + x * (PI * t * (1.0 + beta)).cos()) / (PI * t * (1.0 - x * x))
}

pub fn rrc_taps(beta: f64, sps: usize, span: usize) -> Result<PulseShape> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::UnsupportedBeta(beta));
    }
    if sps == 0 || span == 0 {
        return Err(Error::InvalidPulse(format!(
            "sps ({sps}) and span ({span}) must be positive"
        )));
    }
    let center = (span * sps) as f64;
    let ts = sps as f64;
    let mut taps: Vec<f64> = (0..=2 * span * sps)
        .map(|k| rrc_impulse((k as f64 - center) / ts, beta) / ts.sqrt())
        .collect();
    let energy = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    for h in &mut taps {
        *h /= energy;
    }
    // Enforce exact evenness; the closed form is symmetric only up to rounding.
    let n = taps.len();
    for k in 0..n / 2 {
        let avg = 0.5 * (taps[k] + taps[n - 1 - k]);
        taps[k] = avg;
        taps[n - 1 - k] = avg;
    }
    Ok(PulseShape {
        beta,
        sps,
        span,
        taps,
    })
}

/// Sample index at which symbol `k`'s pulse peaks.
pub fn symbol_instant(k: usize, sps: usize) -> usize {
    k * sps + sps / 2
}

/// NRZ impulse train convolved with the RRC taps.
///
/// The output holds exactly `n_symbols * sps` samples, aligned so symbol `k`
/// peaks at [`symbol_instant`]`(k)`, and is rescaled to unit mean power. The
/// applied gain is recorded under [`SHAPE_GAIN_KEY`]. An all-zero message
/// (possible with OOK) is returned unscaled.
pub fn shape(symbols: &SymbolSequence, c: &Constellation, pulse: &PulseShape) -> IqFrame {
    let sps = pulse.sps;
    let len = symbols.len() * sps;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    // out[n] = sum_k s_k * taps[n + center - sps/2 - k*sps]
    let lead = pulse.center() as isize - (sps / 2) as isize;
    for (k, &idx) in symbols.indices.iter().enumerate() {
        let s = c.points[idx as usize];
        if s.norm_sqr() == 0.0 {
            continue;
        }
        let start = (k * sps) as isize - lead;
        for (j, &h) in pulse.taps.iter().enumerate() {
            let n = start + j as isize;
            if n < 0 {
                continue;
            }
            if n as usize >= len {
                break;
            }
            out[n as usize] += s * h;
        }
    }
    let mut frame = IqFrame::new(out, sps);
    let power = frame.mean_power();
    let gain = if power > 0.0 {
        power.sqrt().recip()
    } else {
        1.0
    };
    for z in &mut frame.samples {
        *z *= gain;
    }
    frame.meta.insert(SHAPE_GAIN_KEY.to_string(), gain);
    frame
}

/// Receive-side RRC filter: convolution with the taps, group delay removed,
/// length preserved.
pub fn matched_filter(rx: &IqFrame, pulse: &PulseShape) -> IqFrame {
    let len = rx.len();
    let center = pulse.center() as isize;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (n, slot) in out.iter_mut().enumerate() {
        // out[n] = sum_j taps[j] * x[n + center - j]
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &h) in pulse.taps.iter().enumerate() {
            let m = n as isize + center - j as isize;
            if m < 0 {
                break;
            }
            if (m as usize) < len {
                acc += rx.samples[m as usize] * h;
            }
        }
        *slot = acc;
    }
    IqFrame {
        samples: out,
        sps: rx.sps,
        meta: rx.meta.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellations::{build_constellation, modulate_bits, Modulation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn center_tap_is_the_t0_limit() {
        let (beta, sps) = (0.35, 8usize);
        let raw_center = (1.0 - beta + 4.0 * beta / PI) / (sps as f64).sqrt();
        assert!((rrc_impulse(0.0, beta) / (sps as f64).sqrt() - raw_center).abs() < 1e-15);
        // The normalized center tap is the raw one divided by the raw energy.
        let raw: Vec<f64> = (0..=2 * 8 * sps)
            .map(|k| rrc_impulse((k as f64 - 64.0) / sps as f64, beta) / (sps as f64).sqrt())
            .collect();
        let energy = raw.iter().map(|h| h * h).sum::<f64>().sqrt();
        let p = rrc_taps(beta, sps, 8).unwrap();
        assert!((p.taps[p.center()] * energy - raw_center).abs() < 1e-12);
    }

    #[test]
    fn quarter_beta_singularity_matches_neighbours() {
        for beta in [0.2, 0.25, 0.35, 0.5, 1.0] {
            let t0 = 1.0 / (4.0 * beta);
            let limit = rrc_impulse(t0, beta);
            for t in [t0 - 1e-9, t0 + 1e-9, -t0 - 1e-9, -t0 + 1e-9] {
                // Evaluate the generic branch directly, bypassing the limit.
                let x = 4.0 * beta * t;
                let generic = ((PI * t * (1.0 - beta)).sin() + x * (PI * t * (1.0 + beta)).cos())
                    / (PI * t * (1.0 - x * x));
                assert!((generic - limit).abs() < 1e-6, "beta {beta} t {t}");
            }
        }
    }

    #[test]
    fn taps_are_even_and_unit_energy() {
        for (beta, sps) in [(0.2, 16), (0.25, 8), (0.5, 4), (1.0, 3)] {
            let p = rrc_taps(beta, sps, DEFAULT_SPAN).unwrap();
            let n = p.taps.len();
            assert_eq!(n, 2 * DEFAULT_SPAN * sps + 1);
            for k in 0..n {
                assert!((p.taps[k] - p.taps[n - 1 - k]).abs() < 1e-12);
            }
            assert!((p.autocorrelation(0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_validation() {
        assert!(matches!(
            rrc_taps(0.0, 8, 8),
            Err(Error::UnsupportedBeta(_))
        ));
        assert!(matches!(
            rrc_taps(1.5, 8, 8),
            Err(Error::UnsupportedBeta(_))
        ));
        assert!(matches!(rrc_taps(0.3, 0, 8), Err(Error::InvalidPulse(_))));
    }

    #[test]
    fn single_symbol_reproduces_the_taps() {
        let c = build_constellation(Modulation::Bpsk);
        let p = rrc_taps(0.35, 16, 8).unwrap();
        let s = modulate_bits(&[0], &c).unwrap();
        let f = shape(&s, &c, &p);
        assert_eq!(f.len(), 16);
        let gain = f.meta[SHAPE_GAIN_KEY];
        let peak = f.samples[symbol_instant(0, 16)].re;
        assert!((peak / gain / p.taps[p.center()] - 1.0).abs() < 1e-12);
        for (n, z) in f.samples.iter().enumerate() {
            let tap = p.taps[p.center() - 8 + n];
            assert!((z.re - gain * tap).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_length_and_unit_power() {
        let c = build_constellation(Modulation::Qpsk);
        let p = rrc_taps(0.3, 16, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bits: Vec<u8> = (0..64).map(|_| rng.random_range(0..2)).collect();
        let f = shape(&modulate_bits(&bits, &c).unwrap(), &c, &p);
        assert_eq!(f.len(), 512);
        assert!((f.mean_power() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shaping_is_linear_under_negation() {
        let c = build_constellation(Modulation::Bpsk);
        let p = rrc_taps(0.25, 8, 8).unwrap();
        let a = modulate_bits(&[0, 1, 1, 0, 1], &c).unwrap();
        let b = modulate_bits(&[1, 0, 0, 1, 0], &c).unwrap();
        let fa = shape(&a, &c, &p);
        let fb = shape(&b, &c, &p);
        for (x, y) in fa.samples.iter().zip(&fb.samples) {
            assert!((x + y).norm() < 1e-12);
        }
    }

    #[test]
    fn matched_filter_of_zero_is_zero() {
        let p = rrc_taps(0.35, 8, 8).unwrap();
        let f = matched_filter(&IqFrame::zeros(64, 8), &p);
        assert_eq!(f.len(), 64);
        assert!(f.samples.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn isolated_symbol_peaks_at_its_point() {
        let c = build_constellation(Modulation::Qpsk);
        let p = rrc_taps(0.35, 8, 8).unwrap();
        // Long zero guard on both sides so the pulse is never truncated.
        let mut frame = IqFrame::zeros(41 * 8, 8);
        let point = c.points[2];
        let center = symbol_instant(20, 8);
        for (j, &h) in p.taps.iter().enumerate() {
            frame.samples[center + j - p.center()] = point * h;
        }
        let y = matched_filter(&frame, &p);
        assert!((y.samples[center] - point).norm() < 1e-12);
        // The raised-cosine response is ~0 one symbol away.
        assert!(y.samples[center + 8].norm() < 1e-3);
    }
}
