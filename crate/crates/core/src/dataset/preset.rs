use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelProfile, DEFAULT_SCATTERERS};
use crate::constellations::Modulation;
use crate::error::{Error, Result};
use crate::waveform::DEFAULT_SPAN;

pub const DEFAULT_BETA_RANGE: [f64; 2] = [0.2, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Amc,
    Regression,
    SymbolCount,
    Demod,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Amc => "amc",
            Task::Regression => "regression",
            Task::SymbolCount => "symbol_count",
            Task::Demod => "demod",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amc" => Ok(Task::Amc),
            "regression" => Ok(Task::Regression),
            "symbol_count" | "symbols" => Ok(Task::SymbolCount),
            "demod" => Ok(Task::Demod),
            other => Err(Error::TaskMismatch {
                expected: "one of amc, regression, symbol_count, demod".into(),
                found: other.into(),
            }),
        }
    }
}

/// How the oversampling / message length pair is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "draw", rename_all = "snake_case")]
pub enum Sampling {
    /// Draw samples/symbol; the symbol count is `floor(frame_length / sps)`.
    Sps { min: usize, max: usize },
    /// Draw the symbol count; samples/symbol is `floor(frame_length / n)`.
    Symbols { min: usize, max: usize },
}

impl Sampling {
    pub fn range(&self) -> (usize, usize) {
        match *self {
            Sampling::Sps { min, max } | Sampling::Symbols { min, max } => (min, max),
        }
    }
}

/// Everything needed to generate one task's dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPreset {
    pub name: String,
    pub task: Task,
    pub frame_length: usize,
    pub sampling: Sampling,
    pub modulations: Vec<Modulation>,
    pub profile: ChannelProfile,
    pub train_count: u64,
    pub val_count: u64,
    #[serde(default = "default_beta_range")]
    pub beta_range: [f64; 2],
    #[serde(default = "default_span")]
    pub span: usize,
    #[serde(default = "default_scatterers")]
    pub n_scatterers: usize,
}

fn default_beta_range() -> [f64; 2] {
    DEFAULT_BETA_RANGE
}

fn default_span() -> usize {
    DEFAULT_SPAN
}

fn default_scatterers() -> usize {
    DEFAULT_SCATTERERS
}

pub const PRESET_NAMES: [&str; 8] = [
    "amc-desk",
    "regression-desk",
    "symbols-desk",
    "demod-desk",
    "amc-full",
    "regression-full",
    "symbols-full",
    "demod-full",
];

const DESK_TRAIN: u64 = 1 << 10;
const DESK_VAL: u64 = 1 << 8;

impl TaskPreset {
    /// Harsh channel, all 13 alphabets, 512 samples at 16..=32 samples/symbol.
    pub fn amc() -> Self {
        TaskPreset {
            name: "amc-full".into(),
            task: Task::Amc,
            frame_length: 512,
            sampling: Sampling::Sps { min: 16, max: 32 },
            modulations: Modulation::ALL.to_vec(),
            profile: ChannelProfile::harsh(),
            train_count: (1 << 14) * 13,
            val_count: (1 << 11) * 13,
            beta_range: DEFAULT_BETA_RANGE,
            span: DEFAULT_SPAN,
            n_scatterers: DEFAULT_SCATTERERS,
        }
    }

    /// Medium channel, QPSK only, 512 samples at 8..=16 samples/symbol.
    pub fn regression() -> Self {
        TaskPreset {
            name: "regression-full".into(),
            task: Task::Regression,
            sampling: Sampling::Sps { min: 8, max: 16 },
            modulations: vec![Modulation::Qpsk],
            profile: ChannelProfile::medium(),
            train_count: 1 << 17,
            val_count: 1 << 13,
            ..Self::amc()
        }
    }

    /// Harsh channel, 16..=32 symbols per 512-sample message (17 classes).
    pub fn symbol_count() -> Self {
        TaskPreset {
            name: "symbols-full".into(),
            task: Task::SymbolCount,
            sampling: Sampling::Symbols { min: 16, max: 32 },
            ..Self::amc()
        }
    }

    /// Mild channel, 256 symbols at 4 samples/symbol in 1024 samples.
    pub fn demod() -> Self {
        TaskPreset {
            name: "demod-full".into(),
            task: Task::Demod,
            frame_length: 1024,
            sampling: Sampling::Sps { min: 4, max: 4 },
            modulations: vec![Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16],
            profile: ChannelProfile::mild(),
            train_count: (1 << 16) * 3,
            val_count: (1 << 13) * 3,
            ..Self::amc()
        }
    }

    fn desk(mut self, name: &str) -> Self {
        self.name = name.into();
        self.train_count = DESK_TRAIN;
        self.val_count = DESK_VAL;
        self
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let preset = match name {
            "amc-desk" => Self::amc().desk(name),
            "regression-desk" => Self::regression().desk(name),
            "symbols-desk" => Self::symbol_count().desk(name),
            "demod-desk" => Self::demod().desk(name),
            "amc-full" => Self::amc(),
            "regression-full" => Self::regression(),
            "symbols-full" => Self::symbol_count(),
            "demod-full" => Self::demod(),
            _ => {
                return Err(Error::UnknownPreset {
                    name: name.into(),
                    valid: PRESET_NAMES.join(", "),
                })
            }
        };
        Ok(preset)
    }

    pub fn total_count(&self) -> u64 {
        self.train_count + self.val_count
    }

    /// `(sps, n_symbols)` for a drawn value of the sampling variable.
    pub fn derive(&self, drawn: usize) -> (usize, usize) {
        match self.sampling {
            Sampling::Sps { .. } => (drawn, self.frame_length / drawn),
            Sampling::Symbols { .. } => (self.frame_length / drawn, drawn),
        }
    }

    /// Smallest symbol count the preset can produce; class 0 of the
    /// symbol-count task.
    pub fn min_symbols(&self) -> usize {
        match self.sampling {
            Sampling::Sps { max, .. } => self.frame_length / max,
            Sampling::Symbols { min, .. } => min,
        }
    }

    pub fn max_symbols(&self) -> usize {
        match self.sampling {
            Sampling::Sps { min, .. } => self.frame_length / min,
            Sampling::Symbols { max, .. } => max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPreset(format!("{}: {msg}", self.name)));
        if self.frame_length == 0 || !self.frame_length.is_multiple_of(4) {
            return bad(format!(
                "frame_length {} must be a positive multiple of 4",
                self.frame_length
            ));
        }
        let (min, max) = self.sampling.range();
        if min == 0 || min > max {
            return bad(format!(
                "sampling range [{min}, {max}] is empty or starts at 0"
            ));
        }
        if max > self.frame_length {
            return bad(format!(
                "sampling maximum {max} exceeds frame_length {}",
                self.frame_length
            ));
        }
        if self.modulations.is_empty() {
            return bad("no modulations".into());
        }
        let widest = self
            .modulations
            .iter()
            .map(|m| m.bits_per_symbol())
            .max()
            .unwrap();
        let most_symbols = self.max_symbols();
        if most_symbols > u16::MAX as usize || most_symbols * widest > u16::MAX as usize {
            return bad(format!(
                "{most_symbols} symbols x {widest} bits does not fit the record bit counter"
            ));
        }
        if self.frame_length / max > u16::MAX as usize || max > u16::MAX as usize {
            return bad("samples/symbol does not fit the record".into());
        }
        let [blo, bhi] = self.beta_range;
        if !(blo > 0.0 && blo <= bhi && bhi <= 1.0) {
            return bad(format!("beta_range [{blo}, {bhi}] must lie in (0, 1]"));
        }
        if self.span == 0 {
            return bad("span must be positive".into());
        }
        if self.n_scatterers < 2 {
            return bad("need at least 2 scatterers".into());
        }
        self.profile.validate()
    }
}
