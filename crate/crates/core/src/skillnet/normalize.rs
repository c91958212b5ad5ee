use serde::{Deserialize, Serialize};

use super::{Channel, FeatureRow, NUM_CHANNELS, NUM_INPUTS};

/// Per-channel min-max scaling to [-1, 1]. Channel 0 is the predicted
/// control, so its extrema are the device range used by the error metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: [f64; NUM_CHANNELS],
    pub max: [f64; NUM_CHANNELS],
}

impl Normalizer {
    /// Extrema over a corpus. A channel with no spread is widened by 1 on
    /// each side so scaling stays finite.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a FeatureRow>, channel: Channel) -> Self {
        let mut min = [f64::INFINITY; NUM_CHANNELS];
        let mut max = [f64::NEG_INFINITY; NUM_CHANNELS];
        for row in rows {
            for (i, v) in row.channels(channel).into_iter().enumerate() {
                min[i] = min[i].min(v);
                max[i] = max[i].max(v);
            }
        }
        for i in 0..NUM_CHANNELS {
            if !min[i].is_finite() || !max[i].is_finite() {
                min[i] = -1.0;
                max[i] = 1.0;
            } else if max[i] <= min[i] {
                min[i] -= 1.0;
                max[i] += 1.0;
            }
        }
        Self { min, max }
    }

    pub fn normalize(&self, ch: usize, x: f64) -> f64 {
        2.0 * (x - self.min[ch]) / (self.max[ch] - self.min[ch]) - 1.0
    }

    pub fn denormalize(&self, ch: usize, y: f64) -> f64 {
        self.min[ch] + 0.5 * (y + 1.0) * (self.max[ch] - self.min[ch])
    }

    pub fn normalize_inputs(&self, inputs: &[f64; NUM_INPUTS]) -> [f64; NUM_INPUTS] {
        let mut out = [0.0; NUM_INPUTS];
        for (i, (o, &x)) in out.iter_mut().zip(inputs).enumerate() {
            *o = self.normalize(i % NUM_CHANNELS, x);
        }
        out
    }

    /// `theta_M - theta_m` of the predicted control.
    pub fn output_range(&self) -> f64 {
        self.max[0] - self.min[0]
    }
}
