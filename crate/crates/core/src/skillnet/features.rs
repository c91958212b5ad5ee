use serde::{Deserialize, Serialize};

use super::{Channel, SkillNetError, DEPTH, HISTORY, NUM_CHANNELS, NUM_INPUTS, TAU};
use crate::runlog::{LogRow, RunLog};

/// Hazard features `z_i = 1 / (1 + d_i)`.
pub fn compute_env_features(d: [f64; 5]) -> [f64; 5] {
    d.map(|di| 1.0 / (1.0 + di))
}

/// Per-tick quantities the networks read.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureRow {
    pub theta_s: f64,
    pub theta_a: f64,
    pub v: f64,
    pub yaw_rate: f64,
    pub rpm: f64,
    pub z: [f64; 5],
}

impl FeatureRow {
    pub fn from_log_row(row: &LogRow) -> Self {
        Self {
            theta_s: row.theta_s,
            theta_a: row.theta_a,
            v: row.v,
            yaw_rate: row.yaw_rate,
            rpm: row.rpm,
            z: compute_env_features(row.d),
        }
    }

    pub fn control(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Steer => self.theta_s,
            Channel::Accel => self.theta_a,
        }
    }

    /// Channel values in normalizer order: control, v, yaw rate, rpm, z1..z5.
    pub fn channels(&self, channel: Channel) -> [f64; NUM_CHANNELS] {
        let z = self.z;
        [self.control(channel), self.v, self.yaw_rate, self.rpm, z[0], z[1], z[2], z[3], z[4]]
    }
}

pub fn feature_rows(log: &RunLog) -> Vec<FeatureRow> {
    log.rows.iter().map(FeatureRow::from_log_row).collect()
}

/// One input/label pair. Inputs are tap-major: taps `k, k-τ, ..., k-4τ`,
/// each holding the nine channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureWindow {
    pub inputs: [f64; NUM_INPUTS],
    pub label: f64,
}

/// Inputs for a window; `newest_first` yields at least `HISTORY + 1`
/// consecutive rows starting at sample `k` and walking back in time.
pub(crate) fn window_inputs<'a>(
    newest_first: impl Iterator<Item = &'a FeatureRow>,
    channel: Channel,
) -> [f64; NUM_INPUTS] {
    let mut inputs = [0.0; NUM_INPUTS];
    for (tap, row) in newest_first.step_by(TAU).take(DEPTH).enumerate() {
        inputs[tap * NUM_CHANNELS..(tap + 1) * NUM_CHANNELS].copy_from_slice(&row.channels(channel));
    }
    inputs
}

/// Valid window indices `k` for a log of `len` rows.
pub fn valid_window_range(len: usize) -> std::ops::Range<usize> {
    if len < HISTORY + TAU + 1 {
        HISTORY..HISTORY
    } else {
        HISTORY..len - TAU
    }
}

pub fn assemble_features(rows: &[FeatureRow], k: usize, channel: Channel) -> Result<FeatureWindow, SkillNetError> {
    if k < HISTORY || k + TAU >= rows.len() {
        return Err(SkillNetError::IndexOutOfRange { k, len: rows.len() });
    }
    let inputs = window_inputs(rows[k - HISTORY..=k].iter().rev(), channel);
    Ok(FeatureWindow { inputs, label: rows[k + TAU].control(channel) })
}

/// Every `stride`-th valid window of a log.
pub fn windows_from_log(log: &RunLog, channel: Channel, stride: usize) -> Vec<FeatureWindow> {
    let rows = feature_rows(log);
    valid_window_range(rows.len())
        .step_by(stride.max(1))
        .map(|k| assemble_features(&rows, k, channel).expect("index inside the valid range"))
        .collect()
}
