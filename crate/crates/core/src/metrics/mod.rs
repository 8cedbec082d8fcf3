//! Classical DSP oracles and task scoring.

mod oracle;
mod predictions;
mod score;

pub use oracle::{
    demodulate_frame, invert_channel, oracle_demod, q_function, theoretical_ser, ChannelInversion,
    OracleMode, NEAR_ZERO_GAIN,
};
pub use predictions::{
    parse_predictions, predictions_to_csv, read_predictions, write_predictions, Payload,
    PredictionRecord,
};
pub use score::{
    decode_regression_target, encode_regression_target, score_classification, score_demod,
    score_regression, wrap_angle, ClassTruth, ClassificationScore, ConfusionMatrix, DemodScore,
    DemodTruth, ErrorStats, ModulationAccuracy, RegressionScore, RegressionTruth, ScatterRow,
    SnrCurve, DEFAULT_BIN_WIDTH_DB, SCATTER_CAP,
};

use crate::constellations::Modulation;
use crate::dataset::{Example, Task, TaskPreset};

/// Class names for a classification preset, in class-index order.
pub fn class_labels(preset: &TaskPreset) -> Vec<String> {
    match preset.task {
        Task::SymbolCount => (preset.min_symbols()..=preset.max_symbols())
            .map(|n| n.to_string())
            .collect(),
        _ => Modulation::ALL
            .iter()
            .map(|m| m.name().to_string())
            .collect(),
    }
}

pub fn class_truth(ex: &Example, preset: &TaskPreset) -> Option<ClassTruth> {
    ex.class_label(preset).map(|label| ClassTruth {
        index: ex.index,
        label,
        snr_db: ex.channel.snr_db,
    })
}

pub fn regression_truth(ex: &Example) -> RegressionTruth {
    RegressionTruth {
        index: ex.index,
        phase_offset: ex.channel.phase_offset,
        freq_offset: ex.channel.freq_offset,
        snr_db: ex.channel.snr_db,
    }
}

pub fn demod_truth(ex: &Example) -> DemodTruth {
    DemodTruth {
        index: ex.index,
        modulation: ex.modulation,
        symbols: ex.symbols.indices.clone(),
        snr_db: ex.channel.snr_db,
    }
}
