//! The thirteen digital modulation alphabets, Gray bit labelling and
//! nearest-neighbour demapping.
//!
//! Every constellation is normalized to unit mean symbol energy. The id table
//! is frozen: dataset files reference alphabets by id.
//!
//! | id | name     | family              |
//! |----|----------|---------------------|
//! | 0  | OOK      | on-off keying       |
//! | 1  | 4-ASK    | bipolar amplitude   |
//! | 2  | 8-ASK    | bipolar amplitude   |
//! | 3  | BPSK     | phase               |
//! | 4  | QPSK     | phase               |
//! | 5  | 8-PSK    | phase               |
//! | 6  | 16-PSK   | phase               |
//! | 7  | 16-APSK  | 4+12 amplitude-phase|
//! | 8  | 16-QAM   | square QAM          |
//! | 9  | 32-QAM   | cross QAM           |
//! | 10 | 64-QAM   | square QAM          |
//! | 11 | 128-QAM  | cross QAM           |
//! | 12 | 256-QAM  | square QAM          |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outer/inner ring radius ratio of 16-APSK.
pub const APSK16_RING_RATIO: f64 = 2.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
#[repr(u8)]
pub enum Modulation {
    Ook = 0,
    Ask4 = 1,
    Ask8 = 2,
    Bpsk = 3,
    Qpsk = 4,
    Psk8 = 5,
    Psk16 = 6,
    Apsk16 = 7,
    Qam16 = 8,
    Qam32 = 9,
    Qam64 = 10,
    Qam128 = 11,
    Qam256 = 12,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    OnOff,
    Ask,
    Psk,
    Apsk,
    SquareQam,
    CrossQam,
}

impl Modulation {
    pub const ALL: [Modulation; 13] = [
        Modulation::Ook,
        Modulation::Ask4,
        Modulation::Ask8,
        Modulation::Bpsk,
        Modulation::Qpsk,
        Modulation::Psk8,
        Modulation::Psk16,
        Modulation::Apsk16,
        Modulation::Qam16,
        Modulation::Qam32,
        Modulation::Qam64,
        Modulation::Qam128,
        Modulation::Qam256,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .get(id as usize)
            .copied()
            .ok_or_else(|| Error::UnsupportedModulation(format!("id {id}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Ook => "OOK",
            Modulation::Ask4 => "4-ASK",
            Modulation::Ask8 => "8-ASK",
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Psk8 => "8-PSK",
            Modulation::Psk16 => "16-PSK",
            Modulation::Apsk16 => "16-APSK",
            Modulation::Qam16 => "16-QAM",
            Modulation::Qam32 => "32-QAM",
            Modulation::Qam64 => "64-QAM",
            Modulation::Qam128 => "128-QAM",
            Modulation::Qam256 => "256-QAM",
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Ook | Modulation::Bpsk => 1,
            Modulation::Ask4 | Modulation::Qpsk => 2,
            Modulation::Ask8 | Modulation::Psk8 => 3,
            Modulation::Psk16 | Modulation::Apsk16 | Modulation::Qam16 => 4,
            Modulation::Qam32 => 5,
            Modulation::Qam64 => 6,
            Modulation::Qam128 => 7,
            Modulation::Qam256 => 8,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn family(self) -> Family {
        match self {
            Modulation::Ook => Family::OnOff,
            Modulation::Ask4 | Modulation::Ask8 => Family::Ask,
            Modulation::Bpsk | Modulation::Qpsk | Modulation::Psk8 | Modulation::Psk16 => {
                Family::Psk
            }
            Modulation::Apsk16 => Family::Apsk,
            Modulation::Qam16 | Modulation::Qam64 | Modulation::Qam256 => Family::SquareQam,
            Modulation::Qam32 | Modulation::Qam128 => Family::CrossQam,
        }
    }
}

impl From<Modulation> for u8 {
    fn from(m: Modulation) -> u8 {
        m.id()
    }
}

impl TryFrom<u8> for Modulation {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        Modulation::from_id(id)
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    /// Accepts the table name (case-insensitive, `-` optional, order digits
    /// first or last) or the numeric id.
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(id) = s.parse::<u8>() {
            return Modulation::from_id(id);
        }
        let key: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect::<String>()
            .to_ascii_uppercase();
        Modulation::ALL
            .into_iter()
            .find(|m| {
                let name = m.name().replace('-', "");
                let split = name.find(|c: char| !c.is_ascii_digit()).unwrap_or(0);
                name == key || format!("{}{}", &name[split..], &name[..split]) == key
            })
            .ok_or_else(|| Error::UnsupportedModulation(s.to_string()))
    }
}

/// Binary-reflected Gray code.
pub fn gray(n: usize) -> usize {
    n ^ (n >> 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub modulation: Modulation,
    pub points: Vec<Complex64>,
    /// `bit_labels[k]` is the bit pattern carried by `points[k]`, MSB first.
    pub bit_labels: Vec<u16>,
    #[serde(skip)]
    index_of_label: Vec<u16>,
}

impl Constellation {
    pub fn id(&self) -> u8 {
        self.modulation.id()
    }

    pub fn name(&self) -> &'static str {
        self.modulation.name()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the point carrying `label`.
    pub fn index_of_label(&self, label: u16) -> usize {
        self.index_of_label[label as usize] as usize
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (a, pa) in self.points.iter().enumerate() {
            for pb in &self.points[a + 1..] {
                best = best.min((pa - pb).norm());
            }
        }
        best
    }

    /// Nearest point index; ties go to the lowest index.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    fn from_parts(modulation: Modulation, points: Vec<Complex64>, labels: Vec<u16>) -> Self {
        let scale = (points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64)
            .sqrt()
            .recip();
        let points: Vec<Complex64> = points.into_iter().map(|p| p * scale).collect();
        let mut index_of_label = vec![0u16; labels.len()];
        for (k, &l) in labels.iter().enumerate() {
            index_of_label[l as usize] = k as u16;
        }
        Constellation {
            modulation,
            points,
            bit_labels: labels,
            index_of_label,
        }
    }
}

/// Discrete message between the bit stream and the waveform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSequence {
    pub modulation: Modulation,
    pub indices: Vec<u16>,
}

impl SymbolSequence {
    pub fn new(modulation: Modulation, indices: Vec<u16>) -> Result<Self> {
        let size = modulation.order();
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= size) {
            return Err(Error::SymbolOutOfRange {
                index: bad as usize,
                size,
            });
        }
        Ok(SymbolSequence {
            modulation,
            indices,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn points(&self, c: &Constellation) -> Vec<Complex64> {
        self.indices.iter().map(|&i| c.points[i as usize]).collect()
    }
}

pub fn build_constellation(kind: Modulation) -> Constellation {
    match kind.family() {
        Family::OnOff => Constellation::from_parts(
            kind,
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![0, 1],
        ),
        Family::Ask => {
            let m = kind.order();
            let points = (0..m)
                .map(|k| Complex64::new((2 * k) as f64 - (m - 1) as f64, 0.0))
                .collect();
            let labels = (0..m).map(|k| gray(k) as u16).collect();
            Constellation::from_parts(kind, points, labels)
        }
        Family::Psk => {
            let m = kind.order();
            // QPSK sits on the diagonals, the others start on the real axis.
            let offset = if m == 4 { PI / 4.0 } else { 0.0 };
            let points = (0..m)
                .map(|k| Complex64::from_polar(1.0, offset + 2.0 * PI * k as f64 / m as f64))
                .collect();
            let labels = (0..m).map(|k| gray(k) as u16).collect();
            Constellation::from_parts(kind, points, labels)
        }
        Family::Apsk => {
            let mut points = Vec::with_capacity(16);
            let mut labels = Vec::with_capacity(16);
            for (k, label) in [8u16, 9, 11, 10].into_iter().enumerate() {
                points.push(Complex64::from_polar(1.0, PI / 4.0 + PI / 2.0 * k as f64));
                labels.push(label);
            }
            for j in 0..12 {
                points.push(Complex64::from_polar(
                    APSK16_RING_RATIO,
                    PI / 12.0 + PI / 6.0 * j as f64,
                ));
                labels.push(gray(j) as u16);
            }
            Constellation::from_parts(kind, points, labels)
        }
        Family::SquareQam => {
            let rail_bits = kind.bits_per_symbol() / 2;
            let m = 1usize << rail_bits;
            let mut points = Vec::with_capacity(m * m);
            let mut labels = Vec::with_capacity(m * m);
            for i in 0..m {
                for q in 0..m {
                    points.push(Complex64::new(level(i, m), level(q, m)));
                    labels.push(((gray(i) << rail_bits) | gray(q)) as u16);
                }
            }
            Constellation::from_parts(kind, points, labels)
        }
        Family::CrossQam => cross_qam(kind),
    }
}

/// Centered odd-integer level for rail index `k` of `m`.
fn level(k: usize, m: usize) -> f64 {
    (2 * k) as f64 - (m - 1) as f64
}

/// Cross QAM built by folding a Gray-labelled rectangular grid.
///
/// Start from a `2^ceil(b/2) x 2^floor(b/2)` rectangle (I wide), labelled
/// `gray(i) << q_bits | gray(q)`. With core half-extent `h` (largest Q
/// level) and arm depth `d`, columns with `|I| > h + 2d` are folded onto
/// the top/bottom arms: column `|I| = h + 2d + 2j` (j = 1..=d) lands on
/// `|Q'| = h + 2j`, `|I'| = h + 1 - |Q|`, keeping the signs of I and Q.
/// The result is the standard cross with 2x2 (32-QAM: 1x1) corners removed.
fn cross_qam(kind: Modulation) -> Constellation {
    let b = kind.bits_per_symbol();
    let q_bits = b / 2;
    let i_bits = b - q_bits;
    let mi = 1usize << i_bits;
    let mq = 1usize << q_bits;
    let h = (mq - 1) as f64;
    let d = ((mi - mq) / 4) as f64;
    let mut points = Vec::with_capacity(mi * mq);
    let mut labels = Vec::with_capacity(mi * mq);
    for i in 0..mi {
        for q in 0..mq {
            let (x, y) = (level(i, mi), level(q, mq));
            let p = if x.abs() > h + 2.0 * d {
                let j = (x.abs() - h - 2.0 * d) / 2.0;
                Complex64::new(x.signum() * (h + 1.0 - y.abs()), y.signum() * (h + 2.0 * j))
            } else {
                Complex64::new(x, y)
            };
            points.push(p);
            labels.push(((gray(i) << q_bits) | gray(q)) as u16);
        }
    }
    Constellation::from_parts(kind, points, labels)
}

/// Groups `bits` (MSB first) into symbols.
pub fn modulate_bits(bits: &[u8], c: &Constellation) -> Result<SymbolSequence> {
    let bps = c.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::RaggedMessage {
            bits: bits.len(),
            bits_per_symbol: bps,
        });
    }
    let indices = bits
        .chunks_exact(bps)
        .map(|group| {
            let label = group
                .iter()
                .fold(0u16, |acc, &b| (acc << 1) | u16::from(b & 1));
            c.index_of_label(label) as u16
        })
        .collect();
    Ok(SymbolSequence {
        modulation: c.modulation,
        indices,
    })
}

/// Bits carried by a symbol sequence, MSB first per symbol.
pub fn symbols_to_bits(symbols: &SymbolSequence, c: &Constellation) -> Vec<u8> {
    let bps = c.bits_per_symbol();
    let mut bits = Vec::with_capacity(symbols.len() * bps);
    for &i in &symbols.indices {
        let label = c.bit_labels[i as usize];
        for shift in (0..bps).rev() {
            bits.push(((label >> shift) & 1) as u8);
        }
    }
    bits
}

/// Euclidean nearest-point decisions plus the recovered bits.
pub fn hard_demap(symbols: &[Complex64], c: &Constellation) -> (SymbolSequence, Vec<u8>) {
    let seq = SymbolSequence {
        modulation: c.modulation,
        indices: symbols.iter().map(|&z| c.nearest(z) as u16).collect(),
    };
    let bits = symbols_to_bits(&seq, c);
    (seq, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn ids_round_trip() {
        for m in Modulation::ALL {
            assert_eq!(Modulation::from_id(m.id()).unwrap(), m);
            assert_eq!(m.name().parse::<Modulation>().unwrap(), m);
        }
        assert!(matches!(
            Modulation::from_id(13),
            Err(Error::UnsupportedModulation(_))
        ));
        assert!(matches!(
            "MSK".parse::<Modulation>(),
            Err(Error::UnsupportedModulation(_))
        ));
        assert_eq!("qam16".parse::<Modulation>().unwrap(), Modulation::Qam16);
    }

    #[test]
    fn bpsk_is_antipodal_with_zero_on_plus_one() {
        let c = build_constellation(Modulation::Bpsk);
        assert_eq!(c.bits_per_symbol(), 1);
        assert!(close(
            c.points[c.index_of_label(0)],
            Complex64::new(1.0, 0.0)
        ));
        assert!(close(
            c.points[c.index_of_label(1)],
            Complex64::new(-1.0, 0.0)
        ));
        let s = modulate_bits(&[0], &c).unwrap();
        assert!(close(
            c.points[s.indices[0] as usize],
            Complex64::new(1.0, 0.0)
        ));
    }

    #[test]
    fn qpsk_points() {
        let c = build_constellation(Modulation::Qpsk);
        assert_eq!(c.bits_per_symbol(), 2);
        for (re, im) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let p = Complex64::new(re, im) * FRAC_1_SQRT_2;
            assert!(c.points.iter().any(|&q| close(p, q)), "missing {p}");
        }
        let (seq, _) = hard_demap(&[Complex64::new(0.9, 0.8)], &c);
        assert!(close(
            c.points[seq.indices[0] as usize],
            Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
        ));
        assert_eq!(modulate_bits(&[0, 0, 1, 1], &c).unwrap().len(), 2);
    }

    #[test]
    fn qam16_grid() {
        let c = build_constellation(Modulation::Qam16);
        let s = 10f64.sqrt().recip();
        for re in [-3.0, -1.0, 1.0, 3.0] {
            for im in [-3.0, -1.0, 1.0, 3.0] {
                let p = Complex64::new(re, im) * s;
                assert!(c.points.iter().any(|&q| close(p, q)));
            }
        }
    }

    #[test]
    fn qam16_modulation_matches_label_table_lookup() {
        let c = build_constellation(Modulation::Qam16);
        // Brute-force inversion of the label table.
        let lookup = |label: u16| (0..16).find(|&k| c.bit_labels[k] == label).unwrap() as u16;
        let s = modulate_bits(&[0, 1, 1, 0, 1, 0, 0, 1], &c).unwrap();
        assert_eq!(s.indices, vec![lookup(0b0110), lookup(0b1001)]);
    }

    #[test]
    fn cross_qam_layouts() {
        let c = build_constellation(Modulation::Qam32);
        let unit = (c.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / 32.0).sqrt();
        // Raw grid energy of the 32-cross is 20, so the scale is 1/sqrt(20).
        assert!((unit - 1.0).abs() < 1e-12);
        let raw: Vec<(i32, i32)> = c
            .points
            .iter()
            .map(|p| {
                let r = p * 20f64.sqrt();
                (r.re.round() as i32, r.im.round() as i32)
            })
            .collect();
        for &(x, y) in &raw {
            assert!(x.abs() <= 5 && y.abs() <= 5 && !(x.abs() == 5 && y.abs() == 5));
        }
        let c = build_constellation(Modulation::Qam128);
        let raw: Vec<(i32, i32)> = c
            .points
            .iter()
            .map(|p| {
                // Raw 128-cross energy is 82.
                let r = p * 82f64.sqrt();
                (r.re.round() as i32, r.im.round() as i32)
            })
            .collect();
        for &(x, y) in &raw {
            assert!(x.abs() <= 11 && y.abs() <= 11 && !(x.abs() >= 9 && y.abs() >= 9));
        }
    }

    #[test]
    fn ragged_message_rejected() {
        let c = build_constellation(Modulation::Qam16);
        assert!(matches!(
            modulate_bits(&[0, 1, 1], &c),
            Err(Error::RaggedMessage {
                bits: 3,
                bits_per_symbol: 4
            })
        ));
    }

    #[test]
    fn exact_points_demap_to_themselves() {
        for m in Modulation::ALL {
            let c = build_constellation(m);
            let (seq, _) = hard_demap(&c.points, &c);
            let expected: Vec<u16> = (0..c.len() as u16).collect();
            assert_eq!(seq.indices, expected, "{m}");
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let c = build_constellation(Modulation::Bpsk);
        let (seq, _) = hard_demap(&[Complex64::new(0.0, 0.0)], &c);
        assert_eq!(seq.indices, vec![0]);
    }

    #[test]
    fn symbol_sequence_validates_range() {
        assert!(SymbolSequence::new(Modulation::Qpsk, vec![0, 3]).is_ok());
        assert!(matches!(
            SymbolSequence::new(Modulation::Qpsk, vec![4]),
            Err(Error::SymbolOutOfRange { index: 4, size: 4 })
        ));
    }
}
