//! A small dense neural-network engine: affine layers with a fixed
//! vocabulary of activations, MSE and cross-entropy losses, and mini-batch
//! SGD with an optional linear learning-rate decay.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Softmax,
    /// 1 at zero, 0 below; only used by frozen nets.
    Threshold01,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    CrossEntropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    LinearDecayToZero,
}

/// Weight initialisation scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform in `[-0.5/in, 0.5/in]`, the word2vec convention.
    #[default]
    Word2Vec,
    /// Glorot uniform, `±sqrt(6/(in+out))`.
    Glorot,
}

/// Affine map `out×in` (row-major) plus optional bias, then an activation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Option<Vec<f64>>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize, bias: bool, activation: Activation) -> Self {
        Layer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: bias.then(|| vec![0.0; out_dim]),
            activation,
        }
    }

    pub fn random<R: Rng>(
        in_dim: usize,
        out_dim: usize,
        bias: bool,
        activation: Activation,
        init: Init,
        rng: &mut R,
    ) -> Self {
        let bound = match init {
            Init::Word2Vec => 0.5 / in_dim as f64,
            Init::Glorot => (6.0 / (in_dim + out_dim) as f64).sqrt(),
        };
        let mut l = Self::zeros(in_dim, out_dim, bias, activation);
        for w in &mut l.weights {
            *w = rng.random_range(-bound..=bound);
        }
        l
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.in_dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.weights[row * self.in_dim..(row + 1) * self.in_dim]
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for i in 0..self.out_dim {
            let mut s = self.bias.as_ref().map_or(0.0, |b| b[i]);
            for (w, xv) in self.row(i).iter().zip(x) {
                s += w * xv;
            }
            out.push(s);
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.as_ref().map_or(0, Vec::len)
    }
}

fn activate(act: Activation, z: &[f64]) -> Vec<f64> {
    match act {
        Activation::Identity => z.to_vec(),
        Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
        Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
        Activation::Softmax => softmax(z),
        Activation::Threshold01 => z
            .iter()
            .map(|&v| if v >= 0.0 { 1.0 } else { 0.0 })
            .collect(),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-sum-exp stabilised softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Standard basis vector `e_index` of width `n` (0-based index).
pub fn one_hot(index: usize, n: usize) -> Vec<f64> {
    assert!(
        index < n,
        "one-hot index {index} out of range for width {n}"
    );
    let mut v = vec![0.0; n];
    v[index] = 1.0;
    v
}

pub fn loss_value(loss: Loss, output: &[f64], target: &[f64]) -> f64 {
    match loss {
        Loss::Mse => {
            output
                .iter()
                .zip(target)
                .map(|(o, t)| (o - t) * (o - t))
                .sum::<f64>()
                / output.len() as f64
        }
        Loss::CrossEntropy => -output
            .iter()
            .zip(target)
            .filter(|(_, &t)| t != 0.0)
            .map(|(&o, &t)| t * o.max(1e-300).ln())
            .sum::<f64>(),
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct Trace {
    /// `inputs[l]` is the input to layer `l`; the last entry is the output.
    pub activations: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace is never empty")
    }
}

/// Per-layer parameter gradients, same layout as the layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            weights: net
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            bias: net
                .layers
                .iter()
                .map(|l| l.bias.as_ref().map(|b| vec![0.0; b.len()]))
                .collect(),
        }
    }

    pub fn clear(&mut self) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v = 0.0);
        }
        for b in self.bias.iter_mut().flatten() {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w);
            if let Some(b) = b {
                out.extend_from_slice(b);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

impl DenseNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a net needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.len() != l.in_dim * l.out_dim {
                return Err(Error::Config(format!(
                    "layer {k}: weight count does not match shape"
                )));
            }
            if l.bias.as_ref().is_some_and(|b| b.len() != l.out_dim) {
                return Err(Error::Config(format!(
                    "layer {k}: bias length does not match shape"
                )));
            }
            if l.activation == Activation::Softmax && k + 1 != layers.len() {
                return Err(Error::Config(
                    "softmax is only allowed as the final activation".into(),
                ));
            }
        }
        for (k, w) in layers.windows(2).enumerate() {
            if w[0].out_dim != w[1].in_dim {
                return Err(Error::Config(format!(
                    "layer {k} outputs {} values but layer {} expects {}",
                    w[0].out_dim,
                    k + 1,
                    w[1].in_dim
                )));
            }
        }
        Ok(DenseNet { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Frozen nets (any threshold layer) are never trained.
    pub fn is_frozen(&self) -> bool {
        self.layers
            .iter()
            .any(|l| l.activation == Activation::Threshold01)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut z = Vec::new();
        for l in &self.layers {
            l.affine(&cur, &mut z);
            cur = activate(l.activation, &z);
        }
        Ok(cur)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        for l in &self.layers {
            let mut z = Vec::with_capacity(l.out_dim);
            l.affine(activations.last().unwrap(), &mut z);
            activations.push(activate(l.activation, &z));
            pre_activations.push(z);
        }
        Ok(Trace {
            activations,
            pre_activations,
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Accumulates into `grads` the gradient of a loss whose derivative with
    /// respect to the net output is `grad_output`.
    pub fn backward(&self, trace: &Trace, grad_output: &[f64], grads: &mut Gradients) {
        let last = self.layers.len() - 1;
        let delta = activation_backward(
            self.layers[last].activation,
            &trace.pre_activations[last],
            &trace.activations[last + 1],
            grad_output,
        );
        self.backward_from_pre(trace, delta, grads);
    }

    /// As [`backward`](Self::backward), but starting from the gradient with
    /// respect to the final pre-activation.
    pub fn backward_from_pre(&self, trace: &Trace, mut delta: Vec<f64>, grads: &mut Gradients) {
        for k in (0..self.layers.len()).rev() {
            let l = &self.layers[k];
            let input = &trace.activations[k];
            let gw = &mut grads.weights[k];
            // input vectors are often one-hot or sparse averages
            for (j, &xj) in input.iter().enumerate() {
                if xj == 0.0 {
                    continue;
                }
                for (i, &d) in delta.iter().enumerate() {
                    gw[i * l.in_dim + j] += d * xj;
                }
            }
            if let Some(gb) = grads.bias[k].as_mut() {
                for (b, d) in gb.iter_mut().zip(&delta) {
                    *b += d;
                }
            }
            if k == 0 {
                break;
            }
            let mut prev = vec![0.0; l.in_dim];
            for (i, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, w) in prev.iter_mut().zip(l.row(i)) {
                    *p += d * w;
                }
            }
            let below = &self.layers[k - 1];
            delta = activation_backward(
                below.activation,
                &trace.pre_activations[k - 1],
                &trace.activations[k],
                &prev,
            );
        }
    }

    /// Gradient of `loss` for one example, accumulated into `grads`;
    /// returns the loss value.
    pub fn accumulate_example(
        &self,
        loss: Loss,
        input: &[f64],
        target: &[f64],
        grads: &mut Gradients,
    ) -> Result<f64> {
        if target.len() != self.output_dim() {
            return Err(Error::Dimension {
                expected: self.output_dim(),
                found: target.len(),
            });
        }
        let trace = self.forward_trace(input)?;
        let out = trace.output();
        let value = loss_value(loss, out, target);
        let last = self.layers.last().unwrap().activation;
        match (loss, last) {
            (Loss::CrossEntropy, Activation::Softmax) => {
                let t_sum: f64 = target.iter().sum();
                let delta = out.iter().zip(target).map(|(p, t)| p * t_sum - t).collect();
                self.backward_from_pre(&trace, delta, grads);
            }
            _ => {
                let g = loss_gradient(loss, out, target);
                self.backward(&trace, &g, grads);
            }
        }
        Ok(value)
    }

    /// `param -= lr * scale * grad` for every parameter.
    pub fn apply(&mut self, grads: &Gradients, lr: f64, scale: f64) {
        let step = lr * scale;
        for (k, l) in self.layers.iter_mut().enumerate() {
            for (w, g) in l.weights.iter_mut().zip(&grads.weights[k]) {
                *w -= step * g;
            }
            if let (Some(b), Some(gb)) = (l.bias.as_mut(), grads.bias[k].as_ref()) {
                for (v, g) in b.iter_mut().zip(gb) {
                    *v -= step * g;
                }
            }
        }
    }

    fn params_mut(&mut self) -> Vec<&mut f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &mut self.layers {
            out.extend(l.weights.iter_mut());
            if let Some(b) = l.bias.as_mut() {
                out.extend(b.iter_mut());
            }
        }
        out
    }

    /// Checkpoint: one JSON header line with the layer shapes, then each
    /// layer's weight rows and bias row as tab-separated values.
    pub fn to_checkpoint(&self) -> String {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.to_string(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerShape {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    bias: l.bias.is_some(),
                    activation: l.activation,
                })
                .collect(),
        };
        let mut out = serde_json::to_string(&header).expect("header serialises");
        out.push('\n');
        for l in &self.layers {
            for i in 0..l.out_dim {
                push_row(&mut out, l.row(i));
            }
            if let Some(b) = &l.bias {
                push_row(&mut out, b);
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, head) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty checkpoint"))?;
        let header: CheckpointHeader = serde_json::from_str(head)?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::parse(
                1,
                format!("unknown checkpoint format `{}`", header.format),
            ));
        }
        let mut next_row = |n: usize| -> Result<Vec<f64>> {
            let (i, l) = lines
                .next()
                .ok_or_else(|| Error::parse(0, "checkpoint truncated"))?;
            let row: Vec<f64> = l
                .split('\t')
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
            if row.len() != n {
                return Err(Error::parse(
                    i + 1,
                    format!("expected {n} values, found {}", row.len()),
                ));
            }
            Ok(row)
        };
        let mut layers = Vec::with_capacity(header.layers.len());
        for s in &header.layers {
            let mut weights = Vec::with_capacity(s.in_dim * s.out_dim);
            for _ in 0..s.out_dim {
                weights.extend(next_row(s.in_dim)?);
            }
            let bias = if s.bias {
                Some(next_row(s.out_dim)?)
            } else {
                None
            };
            layers.push(Layer {
                in_dim: s.in_dim,
                out_dim: s.out_dim,
                weights,
                bias,
                activation: s.activation,
            });
        }
        DenseNet::new(layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text)
    }
}

const CHECKPOINT_FORMAT: &str = "fca2vec-dense-v1";

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    layers: Vec<LayerShape>,
}

#[derive(Serialize, Deserialize)]
struct LayerShape {
    #[serde(rename = "in")]
    in_dim: usize,
    #[serde(rename = "out")]
    out_dim: usize,
    bias: bool,
    activation: Activation,
}

fn push_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// d loss / d output.
pub fn loss_gradient(loss: Loss, output: &[f64], target: &[f64]) -> Vec<f64> {
    match loss {
        Loss::Mse => {
            let n = output.len() as f64;
            output
                .iter()
                .zip(target)
                .map(|(o, t)| 2.0 * (o - t) / n)
                .collect()
        }
        Loss::CrossEntropy => output
            .iter()
            .zip(target)
            .map(|(&o, &t)| if t == 0.0 { 0.0 } else { -t / o.max(1e-300) })
            .collect(),
    }
}

/// Chain rule through an activation: gradient w.r.t. its input given the
/// gradient w.r.t. its output.
fn activation_backward(act: Activation, z: &[f64], a: &[f64], grad: &[f64]) -> Vec<f64> {
    match act {
        Activation::Identity => grad.to_vec(),
        Activation::Relu => z
            .iter()
            .zip(grad)
            .map(|(&zv, &g)| if zv > 0.0 { g } else { 0.0 })
            .collect(),
        Activation::Sigmoid => a
            .iter()
            .zip(grad)
            .map(|(&s, &g)| g * s * (1.0 - s))
            .collect(),
        Activation::Softmax => {
            let dot: f64 = a.iter().zip(grad).map(|(p, g)| p * g).sum();
            a.iter().zip(grad).map(|(&p, &g)| p * (g - dot)).collect()
        }
        Activation::Threshold01 => vec![0.0; z.len()],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr0: f64,
    pub lr_schedule: LrSchedule,
    pub batch_size: usize,
    pub loss: Loss,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1,
            lr0: 0.01,
            lr_schedule: LrSchedule::Constant,
            batch_size: 1,
            loss: Loss::Mse,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be non-negative, got {}",
                self.lr0
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lowest fraction of `lr0` reached by the linear decay.
pub const DECAY_FLOOR: f64 = 1e-4;

/// Mini-batch SGD state: step counter and learning-rate schedule.
#[derive(Clone, Debug)]
pub struct Sgd {
    lr0: f64,
    schedule: LrSchedule,
    loss: Loss,
    total_steps: usize,
    step: usize,
    grads: Option<Gradients>,
}

impl Sgd {
    /// `total_steps = epochs × ceil(examples_per_epoch / batch_size)`.
    pub fn new(cfg: &TrainConfig, examples_per_epoch: usize) -> Self {
        Sgd {
            lr0: cfg.lr0,
            schedule: cfg.lr_schedule,
            loss: cfg.loss,
            total_steps: cfg.epochs * examples_per_epoch.div_ceil(cfg.batch_size),
            step: 0,
            grads: None,
        }
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    /// Learning rate for step `step` (0-based).
    pub fn lr_at(&self, step: usize) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.lr0,
            LrSchedule::LinearDecayToZero => {
                let frac = 1.0 - step as f64 / self.total_steps.max(1) as f64;
                self.lr0 * frac.max(DECAY_FLOOR)
            }
        }
    }

    pub fn current_lr(&self) -> f64 {
        self.lr_at(self.step)
    }

    /// One update on the mean loss of `batch`; returns the summed loss.
    pub fn step<'a, I>(&mut self, net: &mut DenseNet, batch: I) -> Result<f64>
    where
        I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
    {
        let lr = self.lr_at(self.step);
        let grads = self.grads.get_or_insert_with(|| Gradients::zeros_like(net));
        grads.clear();
        let mut total = 0.0;
        let mut count = 0usize;
        for (x, t) in batch {
            total += net.accumulate_example(self.loss, x, t, grads)?;
            count += 1;
        }
        if count > 0 {
            net.apply(grads, lr, 1.0 / count as f64);
            self.step += 1;
        }
        Ok(total)
    }
}

/// Trains `net` on a fixed example list; returns the mean loss per epoch.
pub fn train(
    net: &mut DenseNet,
    examples: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if net.is_frozen() {
        return Err(Error::Config("cannot train a frozen net".into()));
    }
    if examples.is_empty() {
        return Err(Error::EmptyTraining("example list is empty".into()));
    }
    for (x, t) in examples {
        if x.len() != net.input_dim() || t.len() != net.output_dim() {
            return Err(Error::Dimension {
                expected: net.input_dim(),
                found: x.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sgd = Sgd::new(cfg, examples.len());
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let loss = sgd.step(
                net,
                chunk
                    .iter()
                    .map(|&i| (examples[i].0.as_slice(), examples[i].1.as_slice())),
            )?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            sum += loss;
        }
        trace.push(sum / examples.len() as f64);
    }
    Ok(trace)
}

/// Loss trace as CSV `epoch,loss` (epochs numbered from 1).
pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in trace.iter().enumerate() {
        let _ = writeln!(out, "{},{l}", i + 1);
    }
    out
}

/// Largest relative difference between the backpropagated gradient and
/// central finite differences (step `1e-5`) over all parameters.
pub fn gradient_check(net: &DenseNet, input: &[f64], target: &[f64], loss: Loss) -> Result<f64> {
    let mut analytic = Gradients::zeros_like(net);
    net.accumulate_example(loss, input, target, &mut analytic)?;
    compare_with_finite_differences(net, &analytic, |n| {
        Ok(loss_value(loss, &n.forward(input)?, target))
    })
}

/// Compares `analytic` with central differences of `objective` around the
/// parameters of `net`; returns the worst relative error.
pub fn compare_with_finite_differences<F>(
    net: &DenseNet,
    analytic: &Gradients,
    objective: F,
) -> Result<f64>
where
    F: Fn(&DenseNet) -> Result<f64>,
{
    const H: f64 = 1e-5;
    let analytic = analytic.flat();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (p, &a) in analytic.iter().enumerate() {
        let orig = *probe.params_mut()[p];
        *probe.params_mut()[p] = orig + H;
        let plus = objective(&probe)?;
        *probe.params_mut()[p] = orig - H;
        let minus = objective(&probe)?;
        *probe.params_mut()[p] = orig;
        let numeric = (plus - minus) / (2.0 * H);
        let denom = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
