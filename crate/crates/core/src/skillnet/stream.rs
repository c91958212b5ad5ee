use std::collections::VecDeque;

use super::features::window_inputs;
use super::{Channel, FeatureRow, SkillNet, HISTORY};

/// Predictions for the current tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub steer: f64,
    pub accel: f64,
    /// False while the delay line is filling; the values are then the
    /// measured angles.
    pub warm: bool,
}

/// Live tapped-delay buffer feeding both networks once per vehicle tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionStream {
    rows: VecDeque<FeatureRow>,
}

impl PredictionStream {
    pub fn new() -> Self {
        Self { rows: VecDeque::with_capacity(HISTORY + 1) }
    }

    pub fn push(&mut self, row: FeatureRow) {
        if self.rows.len() == HISTORY + 1 {
            self.rows.pop_front();
        }
        self.rows.push_back(row);
    }

    pub fn is_warm(&self) -> bool {
        self.rows.len() == HISTORY + 1
    }

    pub fn inputs(&self, channel: Channel) -> Option<[f64; super::NUM_INPUTS]> {
        self.is_warm().then(|| window_inputs(self.rows.iter().rev(), channel))
    }

    /// Pushes `row` and evaluates the networks. A missing network, like the
    /// warm-up period, yields the measured angle.
    pub fn step(&mut self, row: FeatureRow, net_s: Option<&SkillNet>, net_a: Option<&SkillNet>) -> Prediction {
        self.push(row);
        let predict = |net: Option<&SkillNet>, channel| match (net, self.inputs(channel)) {
            (Some(n), Some(x)) => n.predict(&x),
            _ => row.control(channel),
        };
        Prediction {
            steer: predict(net_s, Channel::Steer),
            accel: predict(net_a, Channel::Accel),
            warm: self.is_warm(),
        }
    }

    pub fn reset(&mut self) {
        self.rows.clear();
    }
}
