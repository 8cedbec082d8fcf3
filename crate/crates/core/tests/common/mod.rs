//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfsynth::constellations::{build_constellation, modulate_bits, Modulation, SymbolSequence};
use rfsynth::waveform::{rrc_taps, shape, IqFrame};

/// `J0(x) = (1/pi) int_0^pi cos(x sin t) dt`, composite Simpson rule.
pub fn bessel_j0(x: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |t: f64| (x * t.sin()).cos();
    let mut s = f(0.0) + f(PI);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 * h);
    }
    s * h / 3.0 / PI
}

/// Standard normal upper tail by Simpson quadrature of the density.
pub fn q_by_quadrature(x: f64) -> f64 {
    // P(Z > x) = 1/2 - int_0^x phi(t) dt for x >= 0
    let n = 20_000;
    let h = x / n as f64;
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let mut s = phi(0.0) + phi(x);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * phi(k as f64 * h);
    }
    0.5 - s * h / 3.0
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn random_bits(n: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..n).map(|_| u8::from(rng.random::<bool>())).collect()
}

pub fn random_symbols(m: Modulation, n_symbols: usize, seed: u64) -> SymbolSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = build_constellation(m);
    modulate_bits(&random_bits(n_symbols * c.bits_per_symbol(), &mut rng), &c).unwrap()
}

/// A shaped, unit-power frame of random symbols.
pub fn random_frame(
    m: Modulation,
    n_symbols: usize,
    sps: usize,
    beta: f64,
    seed: u64,
) -> (SymbolSequence, IqFrame) {
    let syms = random_symbols(m, n_symbols, seed);
    let c = build_constellation(m);
    let pulse = rrc_taps(beta, sps, 8).unwrap();
    let frame = shape(&syms, &c, &pulse);
    (syms, frame)
}

/// Uniformly random complex samples in the unit square.
pub fn random_samples(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Pairs of constellation points at the global minimum distance.
pub fn nearest_pairs(points: &[Complex64]) -> Vec<(usize, usize)> {
    let mut dmin = f64::INFINITY;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            dmin = dmin.min((points[a] - points[b]).norm());
        }
    }
    let mut pairs = Vec::new();
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            if (points[a] - points[b]).norm() < dmin * (1.0 + 1e-9) {
                pairs.push((a, b));
            }
        }
    }
    pairs
}
