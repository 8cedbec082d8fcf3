//! Scoring for the four tasks: confusion matrices, accuracy-vs-SNR curves,
//! regression error statistics.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use super::predictions::{Payload, PredictionRecord};
use crate::constellations::Modulation;
use crate::error::{Error, Result};

pub const DEFAULT_BIN_WIDTH_DB: f64 = 2.0;
pub const SCATTER_CAP: usize = 10_000;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let correct: u64 = (0..self.counts.len()).map(|k| self.counts[k][k]).sum();
        correct as f64 / self.total().max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("truth\\predicted");
        for l in &self.labels {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.counts) {
            out.push_str(l);
            for c in row {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Accuracy binned by true Es/N0. Bin `k` covers
/// `[bin_edges[k], bin_edges[k + 1])`; the last bin is closed. Empty bins
/// report `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrCurve {
    pub bin_edges: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub trials: Vec<u64>,
    pub correct: Vec<u64>,
}

impl SnrCurve {
    /// Empty curve with `width`-dB bins aligned to multiples of `width`,
    /// covering every finite value in `snrs`.
    pub fn for_values(snrs: impl IntoIterator<Item = f64>, width: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in snrs.into_iter().filter(|s| s.is_finite()) {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        if !lo.is_finite() {
            return SnrCurve {
                bin_edges: vec![],
                accuracy: vec![],
                trials: vec![],
                correct: vec![],
            };
        }
        let start = (lo / width).floor() * width;
        let mut bins = ((hi - start) / width).floor() as usize + 1;
        if start + (bins - 1) as f64 * width == hi && bins > 1 {
            bins -= 1;
        }
        let bin_edges = (0..=bins).map(|k| start + k as f64 * width).collect();
        SnrCurve {
            bin_edges,
            accuracy: vec![f64::NAN; bins],
            trials: vec![0; bins],
            correct: vec![0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.trials.len()
    }

    fn bin_of(&self, snr: f64) -> Option<usize> {
        if !snr.is_finite() || self.bins() == 0 {
            return None;
        }
        let width = self.bin_edges[1] - self.bin_edges[0];
        let k = ((snr - self.bin_edges[0]) / width).floor();
        if k < 0.0 {
            return None;
        }
        let k = (k as usize).min(self.bins() - 1);
        (snr <= self.bin_edges[k + 1]).then_some(k)
    }

    /// Adds trials at `snr`; non-finite (noiseless) values are skipped.
    pub fn record(&mut self, snr: f64, trials: u64, correct: u64) {
        if let Some(k) = self.bin_of(snr) {
            self.trials[k] += trials;
            self.correct[k] += correct;
            self.accuracy[k] = self.correct[k] as f64 / self.trials[k] as f64;
        }
    }

    pub fn merge(&mut self, other: &SnrCurve) {
        assert_eq!(self.bin_edges, other.bin_edges, "curves must share bins");
        for k in 0..self.bins() {
            self.trials[k] += other.trials[k];
            self.correct[k] += other.correct[k];
            if self.trials[k] > 0 {
                self.accuracy[k] = self.correct[k] as f64 / self.trials[k] as f64;
            }
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_lo_db,snr_hi_db,snr_center_db,trials,correct,accuracy\n");
        for k in 0..self.bins() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                self.bin_edges[k],
                self.bin_edges[k + 1],
                0.5 * (self.bin_edges[k] + self.bin_edges[k + 1]),
                self.trials[k],
                self.correct[k],
                self.accuracy[k]
            )
            .unwrap();
        }
        out
    }
}

/// Checks that `preds` lists exactly `truth_indices`, in order.
fn check_alignment(preds: &[PredictionRecord], truth_indices: &[u64]) -> Result<()> {
    for (row, (p, &t)) in preds.iter().zip(truth_indices).enumerate() {
        if p.example_index != t {
            return Err(Error::IndexMismatch(format!(
                "prediction row {row} is for example {}, expected example {t}",
                p.example_index
            )));
        }
    }
    if preds.len() < truth_indices.len() {
        return Err(Error::IndexMismatch(format!(
            "missing prediction for example {}",
            truth_indices[preds.len()]
        )));
    }
    if preds.len() > truth_indices.len() {
        return Err(Error::IndexMismatch(format!(
            "unexpected prediction for example {}",
            preds[truth_indices.len()].example_index
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassTruth {
    pub index: u64,
    pub label: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationScore {
    pub confusion: ConfusionMatrix,
    pub curve: SnrCurve,
    pub accuracy: f64,
}

impl ClassificationScore {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "examples: {}", self.confusion.total()).unwrap();
        writeln!(out, "accuracy: {:.6}", self.accuracy).unwrap();
        for (k, (label, row)) in self
            .confusion
            .labels
            .iter()
            .zip(&self.confusion.counts)
            .enumerate()
        {
            let n: u64 = row.iter().sum();
            if n > 0 {
                writeln!(
                    out,
                    "  {label}: {:.6} ({n} examples)",
                    row[k] as f64 / n as f64
                )
                .unwrap();
            }
        }
        out
    }
}

pub fn score_classification(
    preds: &[PredictionRecord],
    truth: &[ClassTruth],
    labels: Vec<String>,
    bin_width_db: f64,
) -> Result<ClassificationScore> {
    let indices: Vec<u64> = truth.iter().map(|t| t.index).collect();
    check_alignment(preds, &indices)?;
    let n_classes = labels.len();
    let mut confusion = ConfusionMatrix::new(labels);
    let mut curve = SnrCurve::for_values(truth.iter().map(|t| t.snr_db), bin_width_db);
    for (p, t) in preds.iter().zip(truth) {
        let Payload::Class(c) = p.payload else {
            return Err(Error::PayloadMismatch {
                index: p.example_index,
                reason: "expected a class index".into(),
            });
        };
        if c >= n_classes || t.label >= n_classes {
            return Err(Error::PayloadMismatch {
                index: p.example_index,
                reason: format!("class {c} outside 0..{n_classes}"),
            });
        }
        confusion.record(t.label, c);
        curve.record(t.snr_db, 1, u64::from(c == t.label));
    }
    Ok(ClassificationScore {
        accuracy: confusion.accuracy(),
        confusion,
        curve,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionTruth {
    pub index: u64,
    pub phase_offset: f64,
    pub freq_offset: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ErrorStats {
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterRow {
    pub index: u64,
    pub phase_true: f64,
    pub phase_pred: f64,
    pub freq_true: f64,
    pub freq_pred: f64,
    pub snr_true: f64,
    pub snr_pred: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionScore {
    pub count: usize,
    pub phase: ErrorStats,
    pub freq: ErrorStats,
    pub snr: ErrorStats,
    /// At most [`SCATTER_CAP`] rows, evenly subsampled.
    pub scatter: Vec<ScatterRow>,
}

impl RegressionScore {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "examples: {}", self.count).unwrap();
        for (name, s) in [
            ("phase_offset_rad", self.phase),
            ("freq_offset", self.freq),
            ("snr_db", self.snr),
        ] {
            writeln!(out, "{name}: mae {:.6e} rmse {:.6e}", s.mae, s.rmse).unwrap();
        }
        out
    }

    pub fn scatter_csv(&self) -> String {
        let mut out =
            String::from("index,phase_true,phase_pred,freq_true,freq_pred,snr_true,snr_pred\n");
        for r in &self.scatter {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.index,
                r.phase_true,
                r.phase_pred,
                r.freq_true,
                r.freq_pred,
                r.snr_true,
                r.snr_pred
            )
            .unwrap();
        }
        out
    }
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(d: f64) -> f64 {
    let w = d - 2.0 * PI * (d / (2.0 * PI)).round();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// `(cos phi, sin phi, 100 df, snr)`: the regression target layout.
pub fn encode_regression_target(phase: f64, freq: f64, snr_db: f64) -> [f64; 4] {
    [phase.cos(), phase.sin(), 100.0 * freq, snr_db]
}

/// Inverse of [`encode_regression_target`]; the phase uses `atan2`, so any
/// positive rescaling of the first two components decodes identically.
pub fn decode_regression_target(v: [f64; 4]) -> (f64, f64, f64) {
    (v[1].atan2(v[0]), v[2] / 100.0, v[3])
}

pub fn score_regression(
    preds: &[PredictionRecord],
    truth: &[RegressionTruth],
) -> Result<RegressionScore> {
    let indices: Vec<u64> = truth.iter().map(|t| t.index).collect();
    check_alignment(preds, &indices)?;
    let n = truth.len();
    let stride = n.div_ceil(SCATTER_CAP).max(1);
    let mut sums = [[0.0f64; 2]; 3];
    let mut scatter = Vec::with_capacity(n.min(SCATTER_CAP));
    for (k, (p, t)) in preds.iter().zip(truth).enumerate() {
        let Payload::Regressed(v) = p.payload else {
            return Err(Error::PayloadMismatch {
                index: p.example_index,
                reason: "expected four regression outputs".into(),
            });
        };
        let (phase, freq, snr) = decode_regression_target(v);
        let errs = [
            wrap_angle(phase - t.phase_offset),
            freq - t.freq_offset,
            snr - t.snr_db,
        ];
        for (s, e) in sums.iter_mut().zip(errs) {
            s[0] += e.abs();
            s[1] += e * e;
        }
        if k % stride == 0 {
            scatter.push(ScatterRow {
                index: t.index,
                phase_true: t.phase_offset,
                phase_pred: phase,
                freq_true: t.freq_offset,
                freq_pred: freq,
                snr_true: t.snr_db,
                snr_pred: snr,
            });
        }
    }
    let stats = |s: [f64; 2]| {
        if n == 0 {
            ErrorStats::default()
        } else {
            ErrorStats {
                mae: s[0] / n as f64,
                rmse: (s[1] / n as f64).sqrt(),
            }
        }
    };
    Ok(RegressionScore {
        count: n,
        phase: stats(sums[0]),
        freq: stats(sums[1]),
        snr: stats(sums[2]),
        scatter,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemodTruth {
    pub index: u64,
    pub modulation: Modulation,
    pub symbols: Vec<u16>,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulationAccuracy {
    pub modulation: String,
    pub symbols: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub curve: SnrCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemodScore {
    pub per_modulation: Vec<ModulationAccuracy>,
    pub accuracy: f64,
    pub curve: SnrCurve,
}

impl DemodScore {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "symbol accuracy: {:.6}", self.accuracy).unwrap();
        for m in &self.per_modulation {
            writeln!(
                out,
                "  {}: {:.6} ({} symbols)",
                m.modulation, m.accuracy, m.symbols
            )
            .unwrap();
        }
        out
    }

    /// One row per (modulation, SNR bin), plus the all-modulation curve.
    pub fn curves_csv(&self) -> String {
        let mut out =
            String::from("modulation,snr_lo_db,snr_hi_db,snr_center_db,trials,correct,accuracy\n");
        let all = std::iter::once(("all", &self.curve)).chain(
            self.per_modulation
                .iter()
                .map(|m| (m.modulation.as_str(), &m.curve)),
        );
        for (name, curve) in all {
            for line in curve.to_csv().lines().skip(1) {
                writeln!(out, "{name},{line}").unwrap();
            }
        }
        out
    }
}

/// Per-symbol accuracy, per modulation and SNR bin.
pub fn score_demod(
    preds: &[PredictionRecord],
    truth: &[DemodTruth],
    bin_width_db: f64,
) -> Result<DemodScore> {
    let indices: Vec<u64> = truth.iter().map(|t| t.index).collect();
    check_alignment(preds, &indices)?;
    let empty = SnrCurve::for_values(truth.iter().map(|t| t.snr_db), bin_width_db);
    let mut curve = empty.clone();
    let mut per: Vec<(Modulation, u64, u64, SnrCurve)> = Vec::new();
    for (p, t) in preds.iter().zip(truth) {
        let Payload::Symbols(ref syms) = p.payload else {
            return Err(Error::PayloadMismatch {
                index: p.example_index,
                reason: "expected symbol indices".into(),
            });
        };
        if syms.len() != t.symbols.len() {
            return Err(Error::PayloadMismatch {
                index: p.example_index,
                reason: format!(
                    "{} symbols predicted, {} expected",
                    syms.len(),
                    t.symbols.len()
                ),
            });
        }
        let correct = syms.iter().zip(&t.symbols).filter(|(a, b)| a == b).count() as u64;
        let trials = syms.len() as u64;
        curve.record(t.snr_db, trials, correct);
        let slot = match per.iter().position(|e| e.0 == t.modulation) {
            Some(k) => k,
            None => {
                per.push((t.modulation, 0, 0, empty.clone()));
                per.len() - 1
            }
        };
        let e = &mut per[slot];
        e.1 += trials;
        e.2 += correct;
        e.3.record(t.snr_db, trials, correct);
    }
    per.sort_by_key(|e| e.0);
    let (total, right) = per.iter().fold((0, 0), |acc, e| (acc.0 + e.1, acc.1 + e.2));
    Ok(DemodScore {
        per_modulation: per
            .into_iter()
            .map(|(m, n, c, curve)| ModulationAccuracy {
                modulation: m.name().to_string(),
                symbols: n,
                correct: c,
                accuracy: c as f64 / n.max(1) as f64,
                curve,
            })
            .collect(),
        accuracy: right as f64 / total.max(1) as f64,
        curve,
    })
}
