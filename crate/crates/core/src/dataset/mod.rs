//! Labelled example synthesis and the RFDS dataset file format.
//!
//! Each example owns an independent random stream seeded from
//! [`mix_seed`]`(base_seed, index)`, so examples can be generated in any
//! order or in parallel with identical results. Draws from that stream, in
//! order:
//!
//! 1. samples/symbol (or symbol count, for the symbol-count task);
//! 2. modulation, uniform over the preset's list;
//! 3. message bits, one `bool` per bit;
//! 4. RRC excess bandwidth, uniform over `beta_range`, rounded to `f32`;
//! 5. channel parameters (see [`sample_channel`]).
//!
//! Noise comes from a second stream seeded with
//! `mix_seed(example_seed, NOISE_STREAM)`, so a stored example's received
//! frame can be rebuilt from its labels alone.

mod format;
mod preset;

pub use format::{
    write_dataset, ConstellationEntry, DatasetHeader, DatasetReader, DatasetWriter, ExampleIter,
    FORMAT_VERSION, MAGIC,
};
pub use preset::{Sampling, Task, TaskPreset, DEFAULT_BETA_RANGE, PRESET_NAMES};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{sample_channel, transmit, ChannelParams};
use crate::constellations::{build_constellation, modulate_bits, Modulation, SymbolSequence};
use crate::error::{Error, Result};
use crate::waveform::{rrc_taps, shape, IqFrame};

/// Stream id mixed into the example seed for channel noise.
pub const NOISE_STREAM: u64 = 0x006e_6f69_7365;

/// SplitMix64-style seed derivation.
///
/// `z = base + (index + 1) * 0x9E3779B97F4A7C15` (wrapping), then the
/// SplitMix64 finalizer: `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
/// z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One labelled dataset record.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub index: u64,
    /// Clean shaped signal before the channel, zero-padded to the frame length.
    pub tx: IqFrame,
    pub rx: IqFrame,
    pub bits: Vec<u8>,
    pub symbols: SymbolSequence,
    pub modulation: Modulation,
    pub channel: ChannelParams,
    pub sps: usize,
    pub n_symbols: usize,
    pub beta: f64,
    pub example_seed: u64,
}

impl Example {
    /// Class index for the classification tasks: modulation id for AMC,
    /// `n_symbols - preset.min_symbols()` for symbol count.
    pub fn class_label(&self, preset: &TaskPreset) -> Option<usize> {
        match preset.task {
            Task::Amc => Some(self.modulation.id() as usize),
            Task::SymbolCount => Some(self.n_symbols - preset.min_symbols()),
            Task::Regression | Task::Demod => None,
        }
    }
}

pub fn generate_example(preset: &TaskPreset, index: u64, base_seed: u64) -> Result<Example> {
    let count = preset.total_count();
    if index >= count {
        return Err(Error::IndexOutOfRange { index, count });
    }
    let example_seed = mix_seed(base_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(example_seed);

    let (lo, hi) = preset.sampling.range();
    let (sps, n_symbols) = preset.derive(rng.random_range(lo..=hi));
    let modulation = preset.modulations[rng.random_range(0..preset.modulations.len())];
    let c = build_constellation(modulation);
    let bits: Vec<u8> = (0..n_symbols * c.bits_per_symbol())
        .map(|_| u8::from(rng.random::<bool>()))
        .collect();
    let symbols = modulate_bits(&bits, &c)?;
    let [blo, bhi] = preset.beta_range;
    let beta = if blo == bhi {
        blo
    } else {
        rng.random_range(blo..=bhi)
    } as f32 as f64;
    let mut channel = sample_channel(&preset.profile, &mut rng);
    channel.n_scatterers = preset.n_scatterers;

    let mut ex = Example {
        index,
        tx: IqFrame::zeros(0, sps),
        rx: IqFrame::zeros(0, sps),
        bits,
        symbols,
        modulation,
        channel,
        sps,
        n_symbols,
        beta,
        example_seed,
    };
    let (tx, rx) = synthesize_signals(&ex, preset)?;
    ex.tx = tx;
    ex.rx = rx;
    Ok(ex)
}

/// Rebuilds `(tx, rx)` from an example's labels and seeds.
///
/// Frames come back rounded to `f32`, exactly as stored on disk.
pub fn synthesize_signals(ex: &Example, preset: &TaskPreset) -> Result<(IqFrame, IqFrame)> {
    let c = build_constellation(ex.modulation);
    let pulse = rrc_taps(ex.beta, ex.sps, preset.span)?;
    let mut tx = shape(&ex.symbols, &c, &pulse)
        .resized(preset.frame_length)
        .quantized_f32();
    tx.meta.clear();
    let mut noise = ChaCha8Rng::seed_from_u64(mix_seed(ex.example_seed, NOISE_STREAM));
    let mut rx = transmit(&tx, &ex.channel, &mut noise)?.quantized_f32();
    rx.meta.clear();
    Ok((tx, rx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_seed_reference_values() {
        // SplitMix64 finalizer of 0x9E3779B97F4A7C15 (state after one step from 0).
        assert_eq!(mix_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(mix_seed(7, 1), mix_seed(7, 2));
        assert_ne!(mix_seed(7, 1), mix_seed(8, 1));
    }

    #[test]
    fn amc_example_shape() {
        let p = TaskPreset::by_name("amc-desk").unwrap();
        for i in 0..20 {
            let ex = generate_example(&p, i, 11).unwrap();
            assert_eq!(ex.tx.len(), 512);
            assert_eq!(ex.rx.len(), 512);
            assert!((16..=32).contains(&ex.sps));
            assert_eq!(ex.n_symbols, 512 / ex.sps);
            assert_eq!(
                ex.bits.len(),
                ex.n_symbols * ex.modulation.bits_per_symbol()
            );
            assert!((0.2..=0.5).contains(&ex.beta));
            // Padding after the last full symbol stays silent in Tx.
            assert!(ex.tx.samples[ex.n_symbols * ex.sps..]
                .iter()
                .all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn symbol_count_derives_sps() {
        let p = TaskPreset::by_name("symbols-desk").unwrap();
        for i in 0..20 {
            let ex = generate_example(&p, i, 3).unwrap();
            assert!((16..=32).contains(&ex.n_symbols));
            assert_eq!(ex.sps, 512 / ex.n_symbols);
            assert!(ex.n_symbols * ex.sps <= 512 && 512 < ex.n_symbols * (ex.sps + 1));
            assert!(ex.class_label(&p).unwrap() < 17);
        }
    }

    #[test]
    fn regression_and_demod_presets() {
        let p = TaskPreset::by_name("regression-desk").unwrap();
        for i in 0..10 {
            let ex = generate_example(&p, i, 5).unwrap();
            assert_eq!(ex.modulation, Modulation::Qpsk);
            assert!((8..=16).contains(&ex.sps));
            assert!(!ex.channel.fading_enabled);
        }
        let p = TaskPreset::by_name("demod-desk").unwrap();
        let ex = generate_example(&p, 0, 5).unwrap();
        assert_eq!((ex.sps, ex.n_symbols, ex.tx.len()), (4, 256, 1024));
    }

    #[test]
    fn generation_is_order_independent() {
        let p = TaskPreset::by_name("amc-desk").unwrap();
        let forward: Vec<Example> = (0..6)
            .map(|i| generate_example(&p, i, 9).unwrap())
            .collect();
        for i in (0..6).rev() {
            assert_eq!(generate_example(&p, i, 9).unwrap(), forward[i as usize]);
        }
    }

    #[test]
    fn labels_reproduce_signals() {
        let p = TaskPreset::by_name("demod-desk").unwrap();
        let ex = generate_example(&p, 4, 21).unwrap();
        let (tx, rx) = synthesize_signals(&ex, &p).unwrap();
        assert_eq!(tx, ex.tx);
        assert_eq!(rx, ex.rx);
    }

    #[test]
    fn index_past_the_end_is_rejected() {
        let p = TaskPreset::by_name("amc-desk").unwrap();
        assert!(matches!(
            generate_example(&p, p.total_count(), 1),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
