use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Channel, FeatureWindow, Normalizer, SkillNet, SkillNetError, TrainingBatch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Learning-rate factor after an accepted step that lowered the cost.
    pub lr_increase: f64,
    /// Learning-rate factor after a rejected step.
    pub lr_decrease: f64,
    /// A step is rejected when the new cost exceeds the old by this ratio.
    pub max_cost_ratio: f64,
    /// Stop once the validation cost falls below this percentage.
    pub threshold_percent: f64,
    pub max_epochs: usize,
    /// Train / validation / test.
    pub fractions: [f64; 3],
    pub seed: u64,
    /// Split by trial instead of by window.
    pub split_by_group: bool,
    /// `None` for full-batch descent.
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            lr_increase: 1.05,
            lr_decrease: 0.7,
            max_cost_ratio: 1.04,
            threshold_percent: 1.0,
            max_epochs: 20_000,
            fractions: [0.70, 0.15, 0.15],
            seed: 1,
            split_by_group: false,
            batch_size: None,
        }
    }
}

impl TrainConfig {
    /// Default configuration with the threshold of the given channel
    /// (1.0 % steering, 4.5 % accelerator).
    pub fn for_channel(channel: Channel) -> Self {
        let threshold_percent = match channel {
            Channel::Steer => 1.0,
            Channel::Accel => 4.5,
        };
        Self { threshold_percent, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SkillNetError> {
        let sum: f64 = self.fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.fractions.iter().any(|f| *f <= 0.0) {
            return Err(SkillNetError::Config(format!("split fractions {:?} must be positive and sum to 1", self.fractions)));
        }
        if !(self.learning_rate > 0.0 && self.lr_increase >= 1.0 && self.lr_decrease > 0.0 && self.lr_decrease < 1.0) {
            return Err(SkillNetError::Config("learning-rate rule constants out of range".into()));
        }
        if self.max_cost_ratio < 1.0 || self.threshold_percent <= 0.0 {
            return Err(SkillNetError::Config("cost ratio must be >= 1 and threshold > 0".into()));
        }
        if self.batch_size == Some(0) {
            return Err(SkillNetError::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Per-epoch record. Costs are fractions of the output range.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub train_cost: Vec<f64>,
    pub val_cost: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub accepted: Vec<bool>,
    pub best_epoch: usize,
    pub best_val_cost: f64,
    pub test_cost: f64,
    pub converged: bool,
}

impl TrainingHistory {
    pub fn epochs(&self) -> usize {
        self.train_cost.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn part_sizes(n: usize, fractions: [f64; 3]) -> (usize, usize) {
    let train = (n as f64 * fractions[0]).round() as usize;
    let val = (n as f64 * fractions[1]).round() as usize;
    (train.min(n), val.min(n - train.min(n)))
}

/// Random split of `n` window indices.
pub fn split_dataset(n: usize, fractions: [f64; 3], seed: u64) -> Result<DatasetSplit, SkillNetError> {
    let (n_train, n_val) = part_sizes(n, fractions);
    if n < 3 || n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(SkillNetError::TooSmall { n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(DatasetSplit { train: idx, val, test })
}

/// Split that keeps all windows of a group (trial) in one part.
pub fn split_by_group(groups: &[usize], fractions: [f64; 3], seed: u64) -> Result<DatasetSplit, SkillNetError> {
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let parts = split_dataset(ids.len(), fractions, seed).map_err(|_| SkillNetError::TooSmall { n: groups.len() })?;
    let part_of = |g: usize| {
        let pos = ids.binary_search(&g).expect("group id present");
        if parts.train.contains(&pos) {
            0
        } else if parts.val.contains(&pos) {
            1
        } else {
            2
        }
    };
    let mut out = DatasetSplit { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (i, &g) in groups.iter().enumerate() {
        match part_of(g) {
            0 => out.train.push(i),
            1 => out.val.push(i),
            _ => out.test.push(i),
        }
    }
    Ok(out)
}

/// Gradient descent with an adaptive learning rate and validation stopping.
///
/// `groups` labels each window with its trial; it is only read when the
/// configuration asks for a by-group split. Returns the weights with the
/// lowest validation cost; `DidNotConverge` carries them when the threshold
/// was never reached.
pub fn train(
    windows: &[FeatureWindow],
    groups: Option<&[usize]>,
    normalizer: Normalizer,
    channel: Channel,
    config: &TrainConfig,
) -> Result<SkillNet, SkillNetError> {
    config.validate()?;
    let split = match (config.split_by_group, groups) {
        (true, Some(g)) => split_by_group(g, config.fractions, config.seed)?,
        (true, None) => return Err(SkillNetError::Config("by-group split needs group labels".into())),
        (false, _) => split_dataset(windows.len(), config.fractions, config.seed)?,
    };
    let all = TrainingBatch::new(windows, &normalizer);
    let tr = all.select(&split.train);
    let va = all.select(&split.val);
    let te = all.select(&split.test);

    let threshold = config.threshold_percent / 100.0;
    let mut net = SkillNet::new_random(channel, normalizer, config.seed);
    let mut history = TrainingHistory::default();
    let mut lr = config.learning_rate;
    let (mut cost, mut grad) = net.cost_and_gradient(&tr);
    let mut best_val = net.cost(&va);
    let mut best = net.clone();
    let mut val = best_val;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..tr.len()).collect();

    for epoch in 1..=config.max_epochs {
        if val < threshold {
            history.converged = true;
            break;
        }
        let mut candidate = net.clone();
        match config.batch_size {
            None => candidate.apply_step(&grad, lr),
            Some(size) => {
                order.shuffle(&mut shuffle_rng);
                for chunk in order.chunks(size) {
                    let (_, g) = candidate.cost_and_gradient(&tr.select(chunk));
                    candidate.apply_step(&g, lr);
                }
            }
        }
        let (new_cost, new_grad) = candidate.cost_and_gradient(&tr);
        let accepted = new_cost.is_finite() && new_cost <= cost * config.max_cost_ratio;
        history.learning_rate.push(lr);
        history.accepted.push(accepted);
        if accepted {
            if new_cost < cost {
                lr *= config.lr_increase;
            }
            net = candidate;
            cost = new_cost;
            grad = new_grad;
            val = net.cost(&va);
            if val < best_val {
                best_val = val;
                best = net.clone();
                history.best_epoch = epoch;
            }
        } else {
            lr *= config.lr_decrease;
        }
        history.train_cost.push(cost);
        history.val_cost.push(val);
    }
    if val < threshold {
        history.converged = true;
    }
    history.best_val_cost = best_val;
    history.test_cost = best.cost(&te);
    best.history = history;
    best.config = Some(config.clone());
    if best.history.converged {
        Ok(best)
    } else {
        Err(SkillNetError::DidNotConverge { epochs: best.history.epochs(), final_cost: best_val, net: Box::new(best) })
    }
}
