//! Transmission-channel model: carrier phase/frequency offset, Jakes
//! Rayleigh fading, Es/N0-calibrated AWGN, and the harsh/medium/mild
//! parameter profiles.
//!
//! [`transmit`] applies fading, then the carrier rotation, then noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::IqFrame;

pub const DEFAULT_SCATTERERS: usize = 64;

/// `snr_db` value meaning "no noise added".
pub const NOISELESS: f64 = f64::INFINITY;

/// One concrete channel draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Carrier phase offset, radians.
    pub phase_offset: f64,
    /// Carrier frequency offset as a fraction of the data rate.
    pub freq_offset: f64,
    /// Es/N0 in dB; [`NOISELESS`] disables noise.
    pub snr_db: f64,
    /// Fading strength, max Doppler shift times message duration.
    pub fading_eta: f64,
    pub fading_enabled: bool,
    pub fading_seed: u64,
    #[serde(default = "default_scatterers")]
    pub n_scatterers: usize,
}

fn default_scatterers() -> usize {
    DEFAULT_SCATTERERS
}

impl ChannelParams {
    /// No fading, no rotation, no noise.
    pub fn neutral() -> Self {
        ChannelParams {
            phase_offset: 0.0,
            freq_offset: 0.0,
            snr_db: NOISELESS,
            fading_eta: 0.0,
            fading_enabled: false,
            fading_seed: 0,
            n_scatterers: DEFAULT_SCATTERERS,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == NOISELESS
    }

    /// The fading gain this draw applies to a frame of `n_samples`.
    pub fn fading_gain(&self, n_samples: usize) -> Option<FadingGain> {
        self.fading_enabled.then(|| {
            jakes_gain(
                n_samples,
                self.fading_eta,
                self.n_scatterers,
                self.fading_seed,
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Harsh,
    Medium,
    Mild,
}

/// Closed intervals to draw [`ChannelParams`] from, uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub name: String,
    pub eta_range: [f64; 2],
    pub phase_range: [f64; 2],
    pub freq_range: [f64; 2],
    pub snr_range: [f64; 2],
    pub fading_enabled: bool,
}

impl ChannelProfile {
    /// No channel correction, moderate fading.
    pub fn harsh() -> Self {
        ChannelProfile {
            name: "harsh".into(),
            eta_range: [0.1, 1.0],
            phase_range: [-PI, PI],
            freq_range: [-0.01, 0.01],
            snr_range: [-10.0, 30.0],
            fading_enabled: true,
        }
    }

    /// No fading, phase limited by partial correction.
    pub fn medium() -> Self {
        ChannelProfile {
            name: "medium".into(),
            eta_range: [0.0, 0.0],
            phase_range: [-PI / 4.0, PI / 4.0],
            freq_range: [-0.01, 0.01],
            snr_range: [-2.0, 40.0],
            fading_enabled: false,
        }
    }

    /// Costas-loop receiver: residual phase within +-10 degrees.
    pub fn mild() -> Self {
        ChannelProfile {
            name: "mild".into(),
            eta_range: [0.1, 1.0],
            phase_range: [-10f64.to_radians(), 10f64.to_radians()],
            freq_range: [-1e-4, 1e-4],
            snr_range: [-10.0, 40.0],
            fading_enabled: true,
        }
    }

    pub fn builtin(name: ProfileName) -> Self {
        match name {
            ProfileName::Harsh => Self::harsh(),
            ProfileName::Medium => Self::medium(),
            ProfileName::Mild => Self::mild(),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "harsh" => Ok(Self::harsh()),
            "medium" => Ok(Self::medium()),
            "mild" => Ok(Self::mild()),
            _ => Err(Error::UnknownProfile(name.to_string())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (label, [lo, hi]) in [
            ("eta_range", self.eta_range),
            ("phase_range", self.phase_range),
            ("freq_range", self.freq_range),
            ("snr_range", self.snr_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidPreset(format!(
                    "profile `{}`: {label} [{lo}, {hi}] is not a nonempty finite interval",
                    self.name
                )));
            }
        }
        if self.eta_range[0] < 0.0 {
            return Err(Error::InvalidPreset(format!(
                "profile `{}`: fading strength must be >= 0",
                self.name
            )));
        }
        Ok(())
    }
}

/// Uniform draw on `[lo, hi]`, rounded to an `f32` that still lies inside.
fn draw_f32_within<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    let v = if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    };
    let mut q = v as f32;
    if (q as f64) > hi {
        q = q.next_down();
    }
    if (q as f64) < lo {
        q = q.next_up();
    }
    q as f64
}

/// Draws one parameter set.
///
/// Draw order: eta (only when fading is enabled), phase, frequency, SNR,
/// fading seed. Real values are rounded to `f32` without leaving their range.
pub fn sample_channel<R: Rng + ?Sized>(profile: &ChannelProfile, rng: &mut R) -> ChannelParams {
    let fading_eta = if profile.fading_enabled {
        draw_f32_within(rng, profile.eta_range)
    } else {
        0.0
    };
    let phase_offset = draw_f32_within(rng, profile.phase_range);
    let freq_offset = draw_f32_within(rng, profile.freq_range);
    let snr_db = draw_f32_within(rng, profile.snr_range);
    let fading_seed = rng.next_u64();
    ChannelParams {
        phase_offset,
        freq_offset,
        snr_db,
        fading_eta,
        fading_enabled: profile.fading_enabled,
        fading_seed,
        n_scatterers: DEFAULT_SCATTERERS,
    }
}

/// Local-oscillator phase/frequency offset.
///
/// Sample `n` is rotated by `2 pi df n / sps + phi`; `df` is in units of the
/// data rate, so one symbol period lasts `sps` samples.
pub fn apply_cfo(frame: &IqFrame, phi: f64, df: f64) -> IqFrame {
    let step = 2.0 * PI * df / frame.sps as f64;
    let samples = frame
        .samples
        .iter()
        .enumerate()
        .map(|(n, z)| z * Complex64::from_polar(1.0, step * n as f64 + phi))
        .collect();
    IqFrame {
        samples,
        sps: frame.sps,
        meta: frame.meta.clone(),
    }
}

/// Per-sample complex fading gain `x + iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingGain {
    pub gain: Vec<Complex64>,
    pub eta: f64,
    pub n_scatterers: usize,
}

impl FadingGain {
    pub fn len(&self) -> usize {
        self.gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gain.is_empty()
    }

    pub fn x(&self) -> Vec<f64> {
        self.gain.iter().map(|g| g.re).collect()
    }

    pub fn y(&self) -> Vec<f64> {
        self.gain.iter().map(|g| g.im).collect()
    }

    pub fn unity(n: usize) -> Self {
        FadingGain {
            gain: vec![Complex64::new(1.0, 0.0); n],
            eta: 0.0,
            n_scatterers: 0,
        }
    }
}

/// Jakes sum-of-scatterers gain with random phases from `seed`.
///
/// The phase stream is `ChaCha8Rng::seed_from_u64(seed)`: all `alpha_n`
/// first, then all `beta_n`, each uniform on `[0, 2 pi)`.
pub fn jakes_gain(n_samples: usize, eta: f64, n_scatterers: usize, seed: u64) -> FadingGain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha: Vec<f64> = (0..n_scatterers)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let beta: Vec<f64> = (0..n_scatterers)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    jakes_gain_with_phases(n_samples, eta, &alpha, &beta)
}

/// Jakes gain for explicit scatterer phases.
///
/// `x + iy = N^-1/2 sum_n [cos(2 pi eta tau cos(theta_n) + alpha_n)
///                        + i sin(2 pi eta tau cos(theta_n) + beta_n)]`
/// with `theta_n = 2 pi n / N` and `tau = sample / n_samples`.
pub fn jakes_gain_with_phases(
    n_samples: usize,
    eta: f64,
    alpha: &[f64],
    beta: &[f64],
) -> FadingGain {
    assert_eq!(
        alpha.len(),
        beta.len(),
        "one alpha and one beta per scatterer"
    );
    let n = alpha.len();
    let norm = (n as f64).sqrt().recip();
    let doppler: Vec<f64> = (0..n)
        .map(|k| 2.0 * PI * eta * (2.0 * PI * k as f64 / n as f64).cos())
        .collect();
    let gain = (0..n_samples)
        .map(|t| {
            let tau = t as f64 / n_samples as f64;
            let (mut x, mut y) = (0.0, 0.0);
            for k in 0..n {
                let arg = doppler[k] * tau;
                x += (arg + alpha[k]).cos();
                y += (arg + beta[k]).sin();
            }
            Complex64::new(x * norm, y * norm)
        })
        .collect();
    FadingGain {
        gain,
        eta,
        n_scatterers: n,
    }
}

/// Flat fading: per-sample complex multiplication by the gain.
pub fn apply_fading(frame: &IqFrame, gain: &FadingGain) -> Result<IqFrame> {
    if gain.len() != frame.len() {
        return Err(Error::LengthMismatch {
            expected: frame.len(),
            actual: gain.len(),
        });
    }
    Ok(IqFrame {
        samples: frame
            .samples
            .iter()
            .zip(&gain.gain)
            .map(|(z, g)| z * g)
            .collect(),
        sps: frame.sps,
        meta: frame.meta.clone(),
    })
}

/// Per-sample complex noise variance for a unit-power frame at `snr_db`.
///
/// With unit mean sample power, `Es = sps`; `N0` is the per-sample complex
/// variance, hence `sigma^2 = sps / 10^(snr_db / 10)`.
pub fn noise_variance(snr_db: f64, sps: usize) -> f64 {
    if snr_db == NOISELESS {
        return 0.0;
    }
    sps as f64 / 10f64.powf(snr_db / 10.0)
}

pub fn add_awgn<R: Rng + ?Sized>(frame: &IqFrame, snr_db: f64, rng: &mut R) -> IqFrame {
    if snr_db == NOISELESS {
        return frame.clone();
    }
    let sigma = (noise_variance(snr_db, frame.sps) / 2.0).sqrt();
    let samples = frame
        .samples
        .iter()
        .map(|z| {
            let i: f64 = rng.sample(StandardNormal);
            let q: f64 = rng.sample(StandardNormal);
            z + Complex64::new(i, q) * sigma
        })
        .collect();
    IqFrame {
        samples,
        sps: frame.sps,
        meta: frame.meta.clone(),
    }
}

/// Fading (if enabled), then carrier offset, then AWGN.
pub fn transmit<R: Rng + ?Sized>(
    tx: &IqFrame,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<IqFrame> {
    let faded = match params.fading_gain(tx.len()) {
        Some(gain) => apply_fading(tx, &gain)?,
        None => tx.clone(),
    };
    let rotated = if params.phase_offset == 0.0 && params.freq_offset == 0.0 {
        faded
    } else {
        apply_cfo(&faded, params.phase_offset, params.freq_offset)
    };
    Ok(add_awgn(&rotated, params.snr_db, rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(samples: &[(f64, f64)], sps: usize) -> IqFrame {
        IqFrame::new(
            samples.iter().map(|&(i, q)| Complex64::new(i, q)).collect(),
            sps,
        )
    }

    fn noisy_frame(len: usize, seed: u64) -> IqFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        IqFrame::new(
            (0..len)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
            16,
        )
    }

    #[test]
    fn zero_offset_is_identity() {
        let f = noisy_frame(64, 1);
        assert_eq!(apply_cfo(&f, 0.0, 0.0).samples, f.samples);
    }

    #[test]
    fn quarter_turn_maps_i_to_q() {
        let out = apply_cfo(&frame(&[(1.0, 0.0)], 16), PI / 2.0, 0.0);
        assert!((out.samples[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn frequency_offset_phase_ramp() {
        let f = IqFrame::new(vec![Complex64::new(1.0, 0.0); 1601], 16);
        let phi = 0.3;
        let out = apply_cfo(&f, phi, 0.01);
        let step = 2.0 * PI * 0.01 / 16.0;
        let d1 = (out.samples[1] / out.samples[0]).arg();
        assert!((d1 - step).abs() < 1e-12);
        // Sample 1600 has turned a full cycle plus phi.
        let expected = Complex64::from_polar(1.0, 2.0 * PI + phi);
        assert!((out.samples[1600] - expected).norm() < 1e-12);
    }

    #[test]
    fn jakes_static_with_zero_phases() {
        let g = jakes_gain_with_phases(8, 0.0, &[0.0; 16], &[0.0; 16]);
        for z in &g.gain {
            // cos(0) sums to N, sin(0) to 0; scaled by 1/sqrt(N).
            assert!((z.re - 4.0).abs() < 1e-12);
            assert!(z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn jakes_is_deterministic_per_seed() {
        let a = jakes_gain(128, 0.5, 64, 99);
        let b = jakes_gain(128, 0.5, 64, 99);
        let c = jakes_gain(128, 0.5, 64, 100);
        assert_eq!(a, b);
        assert_ne!(a.gain, c.gain);
        assert_eq!(a.x().len(), 128);
    }

    #[test]
    fn fading_algebra() {
        let f = frame(&[(1.0, 0.0), (0.3, -0.7)], 4);
        let unity = FadingGain::unity(2);
        assert_eq!(apply_fading(&f, &unity).unwrap().samples, f.samples);

        let rot = FadingGain {
            gain: vec![Complex64::new(0.0, 1.0); 2],
            eta: 0.0,
            n_scatterers: 0,
        };
        let out = apply_fading(&f, &rot).unwrap();
        assert!((out.samples[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);

        let g = jakes_gain(64, 0.7, 64, 5);
        let x = noisy_frame(64, 2);
        let faded = apply_fading(&x, &g).unwrap();
        for ((a, b), gk) in faded.samples.iter().zip(&x.samples).zip(&g.gain) {
            assert!((a / gk - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fading_length_mismatch() {
        let f = noisy_frame(10, 3);
        assert!(matches!(
            apply_fading(&f, &FadingGain::unity(9)),
            Err(Error::LengthMismatch {
                expected: 10,
                actual: 9
            })
        ));
    }

    #[test]
    fn noise_variance_formula() {
        assert_eq!(noise_variance(0.0, 16), 16.0);
        assert!((noise_variance(10.0, 8) - 0.8).abs() < 1e-15);
        assert_eq!(noise_variance(NOISELESS, 8), 0.0);
    }

    #[test]
    fn noiseless_awgn_is_identity() {
        let f = noisy_frame(32, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(add_awgn(&f, NOISELESS, &mut rng), f);
    }

    #[test]
    fn neutral_transmit_is_bit_exact() {
        let f = noisy_frame(256, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rx = transmit(&f, &ChannelParams::neutral(), &mut rng).unwrap();
        assert_eq!(rx.samples, f.samples);
    }

    #[test]
    fn harsh_transmit_is_reproducible() {
        let f = noisy_frame(512, 7);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let p = sample_channel(&ChannelProfile::harsh(), &mut rng);
            transmit(&f, &p, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn medium_profile_draws_no_fading() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let p = sample_channel(&ChannelProfile::medium(), &mut rng);
            assert!(!p.fading_enabled);
            assert_eq!(p.fading_eta, 0.0);
            assert!(p.phase_offset.abs() <= PI / 4.0);
        }
    }

    #[test]
    fn profile_json_round_trip_and_validation() {
        let p = ChannelProfile::mild();
        let text = serde_json::to_string(&p).unwrap();
        let back: ChannelProfile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let mut bad = ChannelProfile::harsh();
        bad.snr_range = [5.0, -5.0];
        assert!(bad.validate().is_err());
        assert!(ChannelProfile::by_name("rough").is_err());
    }
}
