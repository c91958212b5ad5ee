use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Channel, FeatureWindow, Normalizer, SkillNetError, TrainConfig, TrainingHistory, LAYER_SIZES, NUM_INPUTS};

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    /// `(outputs, inputs)`
    weights: Array2<f64>,
    bias: Array1<f64>,
}

/// Multilayer perceptron with tanh hidden layers and a linear output,
/// carrying its normalizer and training record.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillNet {
    pub channel: Channel,
    pub normalizer: Normalizer,
    pub config: Option<TrainConfig>,
    pub history: TrainingHistory,
    layers: Vec<Layer>,
}

/// Normalized inputs (rows) and labels of a training batch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

impl TrainingBatch {
    pub fn new(windows: &[FeatureWindow], normalizer: &Normalizer) -> Self {
        let mut x = Array2::zeros((windows.len(), NUM_INPUTS));
        let mut y = Array1::zeros(windows.len());
        for (i, w) in windows.iter().enumerate() {
            for (j, v) in normalizer.normalize_inputs(&w.inputs).into_iter().enumerate() {
                x[[i, j]] = v;
            }
            y[i] = normalizer.normalize(0, w.label);
        }
        Self { x, y }
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self { x: self.x.select(Axis(0), idx), y: self.y.select(Axis(0), idx) }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Cost gradient per layer: `(dC/dW, dC/db)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradient {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Cost from normalized errors: half the RMS, i.e. RMS error as a fraction
/// of the output range.
pub(crate) fn cost_from_errors(d: &Array1<f64>) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    0.5 * (d.dot(d) / d.len() as f64).sqrt()
}

impl SkillNet {
    /// Uniform `±1/sqrt(fan_in)` initialization with a seeded generator.
    pub fn new_random(channel: Channel, normalizer: Normalizer, seed: u64) -> Self {
        Self::with_sizes(&LAYER_SIZES, channel, normalizer, seed)
    }

    pub fn with_sizes(sizes: &[usize], channel: Channel, normalizer: Normalizer, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_simple_fn((w[1], w[0]), || rng.random_range(-bound..=bound)),
                    bias: Array1::from_shape_simple_fn(w[1], || rng.random_range(-bound..=bound)),
                }
            })
            .collect();
        Self { channel, normalizer, config: None, history: TrainingHistory::default(), layers }
    }

    pub fn zeros(channel: Channel, normalizer: Normalizer) -> Self {
        let mut net = Self::new_random(channel, normalizer, 0);
        net.set_params(&vec![0.0; net.num_params()]);
        net
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].weights.ncols()];
        s.extend(self.layers.iter().map(|l| l.weights.nrows()));
        s
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Weights (row-major) then bias, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.num_params(), "parameter count");
        let mut i = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = p[i];
                i += 1;
            }
        }
    }

    /// `(weights row-major, bias)` of each layer.
    pub fn layer_params(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.layers.iter().map(|l| (l.weights.iter().copied().collect(), l.bias.to_vec())).collect()
    }

    /// Single-sample evaluation on normalized inputs, sequential sums.
    pub fn forward_normalized(&self, x: &[f64]) -> f64 {
        let mut a: Vec<f64> = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(l.bias.len());
            for (row, b) in l.weights.outer_iter().zip(l.bias.iter()) {
                let mut z = *b;
                for (w, xi) in row.iter().zip(&a) {
                    z += w * xi;
                }
                next.push(if li == last { z } else { z.tanh() });
            }
            a = next;
        }
        a[0]
    }

    /// Predicted control angle (deg) for raw window inputs.
    pub fn predict(&self, inputs: &[f64; NUM_INPUTS]) -> f64 {
        let y = self.forward_normalized(&self.normalizer.normalize_inputs(inputs));
        self.normalizer.denormalize(0, y)
    }

    /// Hidden activations of every layer for one normalized sample.
    pub fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        let mut a = Array1::from(x.to_vec());
        for (li, l) in self.layers.iter().enumerate() {
            let z = l.weights.dot(&a) + &l.bias;
            a = if li + 1 == self.layers.len() { z } else { z.mapv(f64::tanh) };
            out.push(a.to_vec());
        }
        out
    }

    fn forward_batch(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let input = if li == 0 { x } else { &acts[li - 1] };
            let mut a = input.dot(&l.weights.t()) + &l.bias;
            if li != last {
                a.mapv_inplace(f64::tanh);
            }
            acts.push(a);
        }
        acts
    }

    /// Normalized outputs for a batch.
    pub fn batch_outputs(&self, batch: &TrainingBatch) -> Array1<f64> {
        self.forward_batch(&batch.x).pop().expect("at least one layer").column(0).to_owned()
    }

    pub fn cost(&self, batch: &TrainingBatch) -> f64 {
        cost_from_errors(&(self.batch_outputs(batch) - &batch.y))
    }

    /// Exact gradient of the cost over the batch.
    pub fn cost_and_gradient(&self, batch: &TrainingBatch) -> (f64, Gradient) {
        let acts = self.forward_batch(&batch.x);
        let out = acts.last().expect("at least one layer").column(0).to_owned();
        let d = out - &batch.y;
        let c = cost_from_errors(&d);
        let n = d.len() as f64;
        let scale = if c > 0.0 { 1.0 / (4.0 * n * c) } else { 0.0 };
        let mut delta = (d * scale).insert_axis(Axis(1));
        let mut layers = Vec::with_capacity(self.layers.len());
        for li in (0..self.layers.len()).rev() {
            let input = if li == 0 { &batch.x } else { &acts[li - 1] };
            let gw = delta.t().dot(input);
            let gb = delta.sum_axis(Axis(0));
            if li > 0 {
                let back = delta.dot(&self.layers[li].weights);
                delta = back * acts[li - 1].mapv(|a| 1.0 - a * a);
            }
            layers.push((gw, gb));
        }
        layers.reverse();
        (c, Gradient { layers })
    }

    /// `params -= lr * grad`.
    pub fn apply_step(&mut self, grad: &Gradient, lr: f64) {
        for (l, (gw, gb)) in self.layers.iter_mut().zip(&grad.layers) {
            l.weights.scaled_add(-lr, gw);
            l.bias.scaled_add(-lr, gb);
        }
    }

    pub fn to_json(&self) -> Result<String, SkillNetError> {
        Ok(serde_json::to_string_pretty(&ModelFile::from_net(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self, SkillNetError> {
        serde_json::from_str::<ModelFile>(text)?.into_net()
    }
}

const MODEL_FORMAT: &str = "skilldrive-net";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    channel: Channel,
    sizes: Vec<usize>,
    layers: Vec<LayerFile>,
    normalizer: Normalizer,
    config: Option<TrainConfig>,
    history: TrainingHistory,
}

impl ModelFile {
    fn from_net(net: &SkillNet) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            channel: net.channel,
            sizes: net.sizes(),
            layers: net.layer_params().into_iter().map(|(weights, bias)| LayerFile { weights, bias }).collect(),
            normalizer: net.normalizer,
            config: net.config.clone(),
            history: net.history.clone(),
        }
    }

    fn into_net(self) -> Result<SkillNet, SkillNetError> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(SkillNetError::Model(format!("unsupported format {} v{}", self.format, self.version)));
        }
        if self.sizes.len() < 2 || self.layers.len() + 1 != self.sizes.len() || self.sizes[0] != NUM_INPUTS {
            return Err(SkillNetError::Model(format!("bad layer sizes {:?}", self.sizes)));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.into_iter().enumerate() {
            let (n_in, n_out) = (self.sizes[i], self.sizes[i + 1]);
            let weights = Array2::from_shape_vec((n_out, n_in), l.weights)
                .map_err(|e| SkillNetError::Model(format!("layer {i}: {e}")))?;
            if l.bias.len() != n_out {
                return Err(SkillNetError::Model(format!("layer {i}: bias length {}", l.bias.len())));
            }
            layers.push(Layer { weights, bias: Array1::from(l.bias) });
        }
        Ok(SkillNet {
            channel: self.channel,
            normalizer: self.normalizer,
            config: self.config,
            history: self.history,
            layers,
        })
    }
}
