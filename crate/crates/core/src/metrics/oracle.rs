//! Classical reference receivers and closed-form AWGN error rates.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::channel::{apply_cfo, ChannelParams, FadingGain};
use crate::constellations::{build_constellation, hard_demap, Constellation, Modulation};
use crate::dataset::Example;
use crate::error::{Error, Result};
use crate::waveform::{rrc_taps, symbol_instant, IqFrame, PulseShape};

/// Gains with magnitude below this are treated as deep fades.
pub const NEAR_ZERO_GAIN: f64 = 1e-6;

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Closed-form AWGN symbol error rate with coherent detection.
///
/// BPSK: `Q(sqrt(2 g))`; square M-QAM (QPSK is M = 4):
/// `1 - (1 - p)^2` with `p = 2 (1 - 1/sqrt(M)) Q(sqrt(3 g / (M - 1)))`,
/// where `g` is linear Es/N0.
pub fn theoretical_ser(modulation: Modulation, esn0_db: f64) -> Result<f64> {
    let g = 10f64.powf(esn0_db / 10.0);
    match modulation {
        Modulation::Bpsk => Ok(q_function((2.0 * g).sqrt())),
        Modulation::Qpsk | Modulation::Qam16 | Modulation::Qam64 | Modulation::Qam256 => {
            let m = modulation.order() as f64;
            let p = 2.0 * (1.0 - m.sqrt().recip()) * q_function((3.0 * g / (m - 1.0)).sqrt());
            Ok(1.0 - (1.0 - p) * (1.0 - p))
        }
        other => Err(Error::UnsupportedModulation(format!(
            "no closed-form SER for {other}"
        ))),
    }
}

/// Output of [`invert_channel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInversion {
    pub frame: IqFrame,
    /// Samples whose fading gain was below [`NEAR_ZERO_GAIN`]; zeroed in `frame`.
    pub flagged: Vec<usize>,
}

/// Undoes the carrier rotation and then the fading gain.
pub fn invert_channel(
    rx: &IqFrame,
    params: &ChannelParams,
    gain: Option<&FadingGain>,
) -> Result<ChannelInversion> {
    let mut frame = apply_cfo(rx, 0.0, -params.freq_offset);
    let unphase = Complex64::from_polar(1.0, -params.phase_offset);
    for z in &mut frame.samples {
        *z *= unphase;
    }
    let mut flagged = Vec::new();
    if let Some(gain) = gain {
        if gain.len() != frame.len() {
            return Err(Error::LengthMismatch {
                expected: frame.len(),
                actual: gain.len(),
            });
        }
        for (n, (z, g)) in frame.samples.iter_mut().zip(&gain.gain).enumerate() {
            if g.norm() < NEAR_ZERO_GAIN {
                flagged.push(n);
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z /= g;
            }
        }
    }
    Ok(ChannelInversion { frame, flagged })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Divide out the known fading gain and carrier rotation first.
    Corrected,
    /// Demodulate the received frame as is.
    Raw,
}

/// Matched-filter demodulation of a dataset example.
pub fn oracle_demod(ex: &Example, span: usize, mode: OracleMode) -> Result<Vec<u16>> {
    let pulse = rrc_taps(ex.beta, ex.sps, span)?;
    let frame = match mode {
        OracleMode::Raw => ex.rx.clone(),
        OracleMode::Corrected => {
            let gain = ex.channel.fading_gain(ex.rx.len());
            invert_channel(&ex.rx, &ex.channel, gain.as_ref())?.frame
        }
    };
    let c = build_constellation(ex.modulation);
    Ok(demodulate_frame(&frame, ex.n_symbols, &c, &pulse))
}

/// Matched filter, symbol-instant sampling, edge equalization and hard
/// decisions for a frame produced by [`crate::waveform::shape`].
///
/// The frame is truncated at both ends, so the outermost symbols see a
/// clipped pulse and extra ISI. The matched-filter outputs are therefore
/// passed through the inverse of the clipped pulses' Gram matrix (banded,
/// identical to the raised-cosine ISI pattern in the interior). The unknown
/// power-normalization gain is first taken from its expectation and then
/// refined once from the tentative decisions.
pub fn demodulate_frame(
    frame: &IqFrame,
    n_symbols: usize,
    c: &Constellation,
    pulse: &PulseShape,
) -> Vec<u16> {
    if n_symbols == 0 {
        return Vec::new();
    }
    let sps = pulse.sps;
    let active = (n_symbols * sps).min(frame.len());
    let gram = BandedGram::new(pulse, n_symbols, active);

    let center = pulse.center() as isize;
    let mf: Vec<Complex64> = (0..n_symbols)
        .map(|k| {
            let start = symbol_instant(k, sps) as isize - center;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &h) in pulse.taps.iter().enumerate() {
                let n = start + j as isize;
                if n >= 0 && (n as usize) < active {
                    acc += frame.samples[n as usize] * h;
                }
            }
            acc
        })
        .collect();

    let chol = gram.cholesky();
    let z = chol.solve(&mf);

    let mut gain = (active as f64 / gram.trace()).sqrt();
    let (first, _) = hard_demap(&scale(&z, gain.recip()), c);
    let decided: Vec<Complex64> = first.points(c);
    let energy = gram.quadratic_form(&decided);
    if energy > 0.0 {
        gain = (active as f64 / energy).sqrt();
    }
    hard_demap(&scale(&z, gain.recip()), c).0.indices
}

fn scale(v: &[Complex64], a: f64) -> Vec<Complex64> {
    v.iter().map(|z| z * a).collect()
}

/// Symmetric banded Gram matrix of the (clipped) shaping pulses.
struct BandedGram {
    n: usize,
    band: usize,
    /// `rows[i][d] = G[i][i - d]` for `d <= min(i, band)`.
    rows: Vec<Vec<f64>>,
}

impl BandedGram {
    fn new(pulse: &PulseShape, n_symbols: usize, active: usize) -> Self {
        let sps = pulse.sps;
        let center = pulse.center();
        let band = 2 * pulse.span;
        let acf: Vec<f64> = (0..=band).map(|d| pulse.autocorrelation(d * sps)).collect();
        let inside = |k: usize| {
            let c = symbol_instant(k, sps);
            c >= center && c + center < active
        };
        let clipped = |a: usize, b: usize| -> f64 {
            // sum over n in [0, active) of h(n - c_a) h(n - c_b)
            let (ca, cb) = (
                symbol_instant(a, sps) as isize,
                symbol_instant(b, sps) as isize,
            );
            let c = center as isize;
            let lo = (ca.max(cb) - c).max(0);
            let hi = (ca.min(cb) + c).min(active as isize - 1);
            (lo..=hi)
                .map(|n| pulse.taps[(n - ca + c) as usize] * pulse.taps[(n - cb + c) as usize])
                .sum()
        };
        let rows = (0..n_symbols)
            .map(|i| {
                (0..=band.min(i))
                    .map(|d| {
                        let j = i - d;
                        if inside(i) && inside(j) {
                            acf[d]
                        } else {
                            clipped(i, j)
                        }
                    })
                    .collect()
            })
            .collect();
        BandedGram {
            n: n_symbols,
            band,
            rows,
        }
    }

    fn trace(&self) -> f64 {
        self.rows.iter().map(|r| r[0]).sum()
    }

    fn quadratic_form(&self, v: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for (d, &g) in self.rows[i].iter().enumerate() {
                let j = i - d;
                let term = g * (v[i].conj() * v[j]).re;
                acc += if d == 0 { term } else { 2.0 * term };
            }
        }
        acc
    }

    fn cholesky(&self) -> BandedCholesky {
        let (n, b) = (self.n, self.band);
        let mut l: Vec<Vec<f64>> = self.rows.iter().map(|r| vec![0.0; r.len()]).collect();
        for i in 0..n {
            for d in (0..l[i].len()).rev() {
                let j = i - d;
                let mut s = self.rows[i][d];
                let k0 = i.saturating_sub(b).max(j.saturating_sub(b));
                for k in k0..j {
                    s -= l[i][i - k] * l[j][j - k];
                }
                if d == 0 {
                    l[i][0] = s.max(f64::MIN_POSITIVE).sqrt();
                } else {
                    l[i][d] = s / l[j][0];
                }
            }
        }
        BandedCholesky { n, l }
    }
}

struct BandedCholesky {
    n: usize,
    /// `l[i][d] = L[i][i - d]`.
    l: Vec<Vec<f64>>,
}

impl BandedCholesky {
    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for d in 1..self.l[i].len() {
                s -= y[i - d] * self.l[i][d];
            }
            y[i] = s / self.l[i][0];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for (k, row) in self.l.iter().enumerate().skip(i + 1) {
                let d = k - i;
                if d >= row.len() {
                    break;
                }
                s -= y[k] * row[d];
            }
            y[i] = s / self.l[i][0];
        }
        y
    }
}
