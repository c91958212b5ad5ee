//! Skill model: tapped-delay features, min-max normalization, the shallow
//! tanh network, its trainer and the live prediction stream.

mod features;
mod network;
mod normalize;
mod stream;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{
    assemble_features, compute_env_features, feature_rows, valid_window_range, windows_from_log,
    FeatureRow, FeatureWindow,
};
pub use network::{Gradient, SkillNet, TrainingBatch};
pub use normalize::Normalizer;
pub use stream::{Prediction, PredictionStream};
pub use train::{split_by_group, split_dataset, train, DatasetSplit, TrainConfig, TrainingHistory};

/// Tap spacing in vehicle ticks (0.2 s at 50 Hz).
pub const TAU: usize = 10;
/// Taps per channel.
pub const DEPTH: usize = 5;
/// Control, speed, yaw rate, engine speed and five ray features.
pub const NUM_CHANNELS: usize = 9;
pub const NUM_INPUTS: usize = NUM_CHANNELS * DEPTH;
/// Oldest tap offset, `(DEPTH - 1) * TAU`.
pub const HISTORY: usize = (DEPTH - 1) * TAU;
pub const LAYER_SIZES: [usize; 6] = [NUM_INPUTS, 32, 24, 16, 8, 1];

/// Device whose angle a network predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Steer,
    Accel,
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Channel::Steer => "s",
            Channel::Accel => "a",
        })
    }
}

impl std::str::FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s" | "steer" => Ok(Channel::Steer),
            "a" | "accel" => Ok(Channel::Accel),
            other => Err(format!("unknown channel `{other}` (expected s or a)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SkillNetError {
    #[error("window at index {k} needs {HISTORY} samples of history and {TAU} of future in a log of {len}")]
    IndexOutOfRange { k: usize, len: usize },
    #[error("{n} windows cannot fill a train/validation/test split")]
    TooSmall { n: usize },
    #[error("training stopped after {epochs} epochs at validation cost {final_cost:.6}")]
    DidNotConverge { epochs: usize, final_cost: f64, net: Box<SkillNet> },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
