//! RFDS v1 on-disk layout.
//!
//! ```text
//! 0..4   magic "RFDS"
//! 4      format version (1)
//! 5..8   reserved, zero
//! 8..12  u32 header length N
//! 12..   N bytes of UTF-8 JSON (DatasetHeader)
//! then `example_count` records:
//!   u64 example_seed, u8 modulation_id, u16 n_symbols, u16 sps,
//!   f32 beta, f32 phase_offset, f32 freq_offset, f32 snr_db, f32 fading_eta,
//!   u8 fading_enabled, u64 fading_seed,
//!   u16 bit_count, ceil(bit_count / 8) bytes of bits packed MSB first,
//!   tx: frame_length interleaved (I, Q) f32 pairs,
//!   rx: likewise.
//! ```
//!
//! All integers and floats are little-endian. A noiseless channel stores
//! `snr_db = +inf`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_example, Example, TaskPreset};
use crate::channel::ChannelParams;
use crate::constellations::{build_constellation, modulate_bits, Modulation};
use crate::error::{Error, Result};
use crate::waveform::IqFrame;

pub const MAGIC: &[u8; 4] = b"RFDS";
pub const FORMAT_VERSION: u8 = 1;

const PREFIX_LEN: usize = 12;
/// Fixed part of a record, up to and including `bit_count`.
const RECORD_FIXED: usize = 8 + 1 + 2 + 2 + 4 * 5 + 1 + 8 + 2;

pub const TX_CONVENTION: &str =
    "tx is the RRC-shaped signal rescaled to unit mean power over its active samples, before the channel, zero-padded to frame_length";
pub const SEED_MIX: &str =
    "example_seed = splitmix64_finalize(base_seed + (index + 1) * 0x9E3779B97F4A7C15); stream = ChaCha8Rng::seed_from_u64(example_seed); noise stream seed = mix(example_seed, 0x6e6f697365)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationEntry {
    pub id: u8,
    pub name: String,
    pub points: Vec<[f64; 2]>,
    pub bit_labels: Vec<u16>,
}

impl ConstellationEntry {
    pub fn table() -> Vec<ConstellationEntry> {
        Modulation::ALL
            .iter()
            .map(|&m| {
                let c = build_constellation(m);
                ConstellationEntry {
                    id: m.id(),
                    name: m.name().to_string(),
                    points: c.points.iter().map(|p| [p.re, p.im]).collect(),
                    bit_labels: c.bit_labels.clone(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format_version: u8,
    pub base_seed: u64,
    /// Index of the first record in the preset's index space.
    pub first_index: u64,
    pub preset: TaskPreset,
    pub constellations: Vec<ConstellationEntry>,
    pub example_count: u64,
    pub frame_length: usize,
    pub tx_convention: String,
    pub seed_mix: String,
}

impl DatasetHeader {
    pub fn new(preset: TaskPreset, base_seed: u64, first_index: u64, example_count: u64) -> Self {
        DatasetHeader {
            format_version: FORMAT_VERSION,
            base_seed,
            first_index,
            frame_length: preset.frame_length,
            preset,
            constellations: ConstellationEntry::table(),
            example_count,
            tx_convention: TX_CONVENTION.into(),
            seed_mix: SEED_MIX.into(),
        }
    }

    fn record_len(&self, bit_count: usize) -> usize {
        RECORD_FIXED + bit_count.div_ceil(8) + 2 * 8 * self.frame_length
    }
}

fn encode_record(ex: &Example, frame_length: usize, buf: &mut Vec<u8>) -> Result<()> {
    for frame in [&ex.tx, &ex.rx] {
        if frame.len() != frame_length {
            return Err(Error::LengthMismatch {
                expected: frame_length,
                actual: frame.len(),
            });
        }
    }
    let ch = &ex.channel;
    buf.extend_from_slice(&ex.example_seed.to_le_bytes());
    buf.push(ex.modulation.id());
    buf.extend_from_slice(&(ex.n_symbols as u16).to_le_bytes());
    buf.extend_from_slice(&(ex.sps as u16).to_le_bytes());
    for v in [
        ex.beta,
        ch.phase_offset,
        ch.freq_offset,
        ch.snr_db,
        ch.fading_eta,
    ] {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    buf.push(u8::from(ch.fading_enabled));
    buf.extend_from_slice(&ch.fading_seed.to_le_bytes());
    buf.extend_from_slice(&(ex.bits.len() as u16).to_le_bytes());
    for chunk in ex.bits.chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (k, &b)| acc | ((b & 1) << (7 - k)));
        buf.push(byte);
    }
    for frame in [&ex.tx, &ex.rx] {
        for z in &frame.samples {
            buf.extend_from_slice(&(z.re as f32).to_le_bytes());
            buf.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
    }
    Ok(())
}

/// Streaming RFDS writer. Records must arrive in index order.
pub struct DatasetWriter<W: Write> {
    out: W,
    path: PathBuf,
    header: DatasetHeader,
    written: u64,
    buf: Vec<u8>,
}

impl DatasetWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, header: DatasetHeader) -> Result<Self> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        DatasetWriter::new(BufWriter::new(file), path, header)
    }
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(mut out: W, path: impl Into<PathBuf>, header: DatasetHeader) -> Result<Self> {
        let path = path.into();
        let json = serde_json::to_vec(&header).map_err(|e| Error::BadHeader(e.to_string()))?;
        let mut prefix = Vec::with_capacity(PREFIX_LEN + json.len());
        prefix.extend_from_slice(MAGIC);
        prefix.push(FORMAT_VERSION);
        prefix.extend_from_slice(&[0, 0, 0]);
        prefix.extend_from_slice(&(json.len() as u32).to_le_bytes());
        prefix.extend_from_slice(&json);
        out.write_all(&prefix).map_err(|e| Error::io(&path, e))?;
        Ok(DatasetWriter {
            out,
            path,
            header,
            written: 0,
            buf: Vec::new(),
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn write_example(&mut self, ex: &Example) -> Result<()> {
        self.buf.clear();
        encode_record(ex, self.header.frame_length, &mut self.buf)?;
        self.write_encoded()
    }

    fn write_encoded(&mut self) -> Result<()> {
        if self.written == self.header.example_count {
            return Err(Error::CountMismatch {
                declared: self.header.example_count,
                written: self.written + 1,
            });
        }
        self.out
            .write_all(&self.buf)
            .map_err(|e| Error::io(&self.path, e))?;
        self.written += 1;
        Ok(())
    }

    /// Flushes and checks that the declared count was honored.
    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.example_count {
            return Err(Error::CountMismatch {
                declared: self.header.example_count,
                written: self.written,
            });
        }
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.out)
    }
}

/// Generates `count` examples starting at `first_index` and writes them to
/// `path` in index order.
///
/// Generation runs on a `threads`-wide pool (0 = rayon default) in chunks,
/// so memory stays bounded; the file bytes do not depend on `threads`.
pub fn write_dataset(
    path: impl AsRef<Path>,
    preset: &TaskPreset,
    base_seed: u64,
    first_index: u64,
    count: u64,
    threads: usize,
) -> Result<DatasetHeader> {
    const CHUNK: u64 = 256;
    preset.validate()?;
    let end = first_index + count;
    if end > preset.total_count() {
        return Err(Error::IndexOutOfRange {
            index: end.saturating_sub(1),
            count: preset.total_count(),
        });
    }
    let header = DatasetHeader::new(preset.clone(), base_seed, first_index, count);
    let mut writer = DatasetWriter::create(path, header)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidPreset(format!("thread pool: {e}")))?;
    let frame_length = preset.frame_length;
    let mut start = first_index;
    while start < end {
        let stop = (start + CHUNK).min(end);
        let encoded: Vec<Vec<u8>> = pool.install(|| {
            (start..stop)
                .into_par_iter()
                .map(|i| {
                    let ex = generate_example(preset, i, base_seed)?;
                    let mut buf = Vec::new();
                    encode_record(&ex, frame_length, &mut buf)?;
                    Ok(buf)
                })
                .collect::<Result<_>>()
        })?;
        for record in encoded {
            writer.buf = record;
            writer.write_encoded()?;
        }
        start = stop;
    }
    let header = writer.header.clone();
    writer.finish()?;
    Ok(header)
}

/// Reads the prefix and header; returns the header and the offset of record 0.
fn read_header<R: Read>(mut r: R, path: &Path) -> Result<(DatasetHeader, u64)> {
    let mut prefix = [0u8; PREFIX_LEN];
    if let Err(e) = r.read_exact(&mut prefix) {
        return Err(if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::BadMagic(path.to_path_buf())
        } else {
            Error::io(path, e)
        });
    }
    if &prefix[..4] != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    if prefix[4] != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: prefix[4],
            expected: FORMAT_VERSION,
        });
    }
    let len = u32::from_le_bytes(prefix[8..12].try_into().unwrap()) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)
        .map_err(|e| Error::BadHeader(format!("header truncated: {e}")))?;
    let header: DatasetHeader =
        serde_json::from_slice(&json).map_err(|e| Error::BadHeader(e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: header.format_version,
            expected: FORMAT_VERSION,
        });
    }
    Ok((header, (PREFIX_LEN + len) as u64))
}

fn read_or_truncated<R: Read>(r: &mut R, buf: &mut [u8], record: u64, path: &Path) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Truncated(record)
        } else {
            Error::io(path, e)
        }
    })
}

fn le_f32(b: &[u8]) -> f64 {
    f32::from_le_bytes(b.try_into().unwrap()) as f64
}

fn decode_record<R: Read>(
    r: &mut R,
    header: &DatasetHeader,
    record: u64,
    path: &Path,
) -> Result<Example> {
    let mut fixed = [0u8; RECORD_FIXED];
    read_or_truncated(r, &mut fixed, record, path)?;
    let u16_at = |o: usize| u16::from_le_bytes(fixed[o..o + 2].try_into().unwrap());
    let example_seed = u64::from_le_bytes(fixed[0..8].try_into().unwrap());
    let modulation = Modulation::from_id(fixed[8]).map_err(|e| Error::BadRecord {
        record,
        reason: e.to_string(),
    })?;
    let n_symbols = u16_at(9) as usize;
    let sps = u16_at(11) as usize;
    let beta = le_f32(&fixed[13..17]);
    let phase_offset = le_f32(&fixed[17..21]);
    let freq_offset = le_f32(&fixed[21..25]);
    let snr_db = le_f32(&fixed[25..29]);
    let fading_eta = le_f32(&fixed[29..33]);
    let fading_enabled = fixed[33] != 0;
    let fading_seed = u64::from_le_bytes(fixed[34..42].try_into().unwrap());
    let bit_count = u16_at(42) as usize;
    if bit_count != n_symbols * modulation.bits_per_symbol() {
        return Err(Error::BadRecord {
            record,
            reason: format!(
                "{bit_count} bits for {n_symbols} {} symbols",
                modulation.name()
            ),
        });
    }

    let mut rest = vec![0u8; header.record_len(bit_count) - RECORD_FIXED];
    read_or_truncated(r, &mut rest, record, path)?;
    let packed = bit_count.div_ceil(8);
    let bits: Vec<u8> = (0..bit_count)
        .map(|k| (rest[k / 8] >> (7 - k % 8)) & 1)
        .collect();
    let c = build_constellation(modulation);
    let symbols = modulate_bits(&bits, &c)?;
    let frame = |bytes: &[u8]| {
        IqFrame::new(
            bytes
                .chunks_exact(8)
                .map(|p| Complex64::new(le_f32(&p[..4]), le_f32(&p[4..])))
                .collect(),
            sps,
        )
    };
    let frame_bytes = 8 * header.frame_length;
    let tx = frame(&rest[packed..packed + frame_bytes]);
    let rx = frame(&rest[packed + frame_bytes..]);
    Ok(Example {
        index: header.first_index + record,
        tx,
        rx,
        bits,
        symbols,
        modulation,
        channel: ChannelParams {
            phase_offset,
            freq_offset,
            snr_db,
            fading_eta,
            fading_enabled,
            fading_seed,
            n_scatterers: header.preset.n_scatterers,
        },
        sps,
        n_symbols,
        beta,
        example_seed,
    })
}

/// RFDS reader. Iterators open their own file handle, so several may run
/// concurrently.
pub struct DatasetReader {
    path: PathBuf,
    header: DatasetHeader,
    data_start: u64,
    offsets: Option<Vec<u64>>,
}

impl DatasetReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let (header, data_start) = read_header(BufReader::new(file), &path)?;
        Ok(DatasetReader {
            path,
            header,
            data_start,
            offsets: None,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> u64 {
        self.header.example_count
    }

    pub fn is_empty(&self) -> bool {
        self.header.example_count == 0
    }

    pub fn iter(&self) -> Result<ExampleIter> {
        let file = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let mut r = BufReader::new(file);
        r.seek(SeekFrom::Start(self.data_start))
            .map_err(|e| Error::io(&self.path, e))?;
        Ok(ExampleIter {
            reader: r,
            header: self.header.clone(),
            path: self.path.clone(),
            next: 0,
            failed: false,
        })
    }

    /// Reads every record.
    pub fn read_all(&self) -> Result<Vec<Example>> {
        self.iter()?.collect()
    }

    /// Random access by record position (0-based within this file).
    ///
    /// Records share one stride when the bit count is constant (single
    /// modulation, fixed message length); otherwise an offset table is built
    /// on first use by walking the record headers.
    pub fn get(&mut self, record: u64) -> Result<Example> {
        if record >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: record,
                count: self.len(),
            });
        }
        let offset = match self.uniform_stride() {
            Some(stride) => self.data_start + record * stride,
            None => {
                if self.offsets.is_none() {
                    self.offsets = Some(self.scan_offsets()?);
                }
                self.offsets.as_ref().unwrap()[record as usize]
            }
        };
        let file = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let mut r = BufReader::new(file);
        r.seek(SeekFrom::Start(offset))
            .map_err(|e| Error::io(&self.path, e))?;
        decode_record(&mut r, &self.header, record, &self.path)
    }

    fn uniform_stride(&self) -> Option<u64> {
        let p = &self.header.preset;
        let (lo, hi) = p.sampling.range();
        let widths: Vec<usize> = p.modulations.iter().map(|m| m.bits_per_symbol()).collect();
        let same_width = widths.windows(2).all(|w| w[0] == w[1]);
        let same_len = (lo..=hi)
            .map(|v| p.derive(v).1)
            .all(|n| n == p.derive(lo).1);
        (same_width && same_len).then(|| self.header.record_len(p.derive(lo).1 * widths[0]) as u64)
    }

    fn scan_offsets(&self) -> Result<Vec<u64>> {
        let file = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let mut r = BufReader::new(file);
        let mut offsets = Vec::with_capacity(self.len() as usize);
        let mut pos = self.data_start;
        let mut fixed = [0u8; RECORD_FIXED];
        for k in 0..self.len() {
            offsets.push(pos);
            r.seek(SeekFrom::Start(pos))
                .map_err(|e| Error::io(&self.path, e))?;
            read_or_truncated(&mut r, &mut fixed, k, &self.path)?;
            let bits = u16::from_le_bytes(fixed[42..44].try_into().unwrap()) as usize;
            pos += self.header.record_len(bits) as u64;
        }
        Ok(offsets)
    }
}

pub struct ExampleIter {
    reader: BufReader<File>,
    header: DatasetHeader,
    path: PathBuf,
    next: u64,
    failed: bool,
}

impl Iterator for ExampleIter {
    type Item = Result<Example>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.next >= self.header.example_count {
            return None;
        }
        let out = decode_record(&mut self.reader, &self.header, self.next, &self.path);
        self.failed = out.is_err();
        self.next += 1;
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.header.example_count - self.next) as usize;
        (0, Some(left))
    }
}
