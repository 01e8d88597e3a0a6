//! Entity embedder: tf-idf input, two rectified hidden layers and a softmax
//! output over the four personality classes, trained with Adam on mean
//! cross-entropy. The activations of the last hidden layer are the
//! embedding.
//!
//! Weights are stored row-major with one row per input unit, so a sparse
//! input row maps to a contiguous slice of the first weight matrix.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::PersonalityClass;
use crate::embeddings::tfidf::{SparseVector, TfidfModel};
use crate::error::{Error, Result};
use crate::rng;

pub const EMBEDDER_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_HIDDEN: [usize; 2] = [256, 64];
pub const N_OUTPUTS: usize = PersonalityClass::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    /// `n_in x n_out`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Uniform in `±sqrt(6 / (n_in + n_out))`, zero bias.
    fn glorot(n_in: usize, n_out: usize, rng: &mut rng::ChaCha8Rng) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        let weights = (0..n_in * n_out).map(|_| rng.random_range(-limit..limit)).collect();
        Dense {
            n_in,
            n_out,
            weights,
            bias: vec![0.0; n_out],
        }
    }

    fn forward_dense(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.n_out..(i + 1) * self.n_out];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }

    fn forward_sparse(&self, x: &SparseVector, out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for &(i, xi) in &x.entries {
            let row = &self.weights[i * self.n_out..(i + 1) * self.n_out];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }
}

/// Three dense layers: input -> hidden[0] -> hidden[1] -> 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: [Dense; 3],
}

/// Activations kept for the backward pass.
struct Trace {
    z1: Vec<f64>,
    h1: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
    probs: Vec<f64>,
}

/// Gradients with the same layout as [`Network::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: [Vec<f64>; 3],
    pub bias: [Vec<f64>; 3],
}

impl Gradients {
    fn zeros(net: &Network) -> Self {
        Gradients {
            weights: net.layers.each_ref().map(|l| vec![0.0; l.weights.len()]),
            bias: net.layers.each_ref().map(|l| vec![0.0; l.bias.len()]),
        }
    }
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| v.max(0.0)).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl Network {
    pub fn new(n_in: usize, hidden: [usize; 2], seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        Network {
            layers: [
                Dense::glorot(n_in, hidden[0], &mut rng),
                Dense::glorot(hidden[0], hidden[1], &mut rng),
                Dense::glorot(hidden[1], N_OUTPUTS, &mut rng),
            ],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers[1].n_out
    }

    fn check_shapes(&self) -> Result<()> {
        for pair in self.layers.windows(2) {
            if pair[0].n_out != pair[1].n_in {
                return Err(Error::validation("layer shapes do not chain"));
            }
        }
        for l in &self.layers {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(Error::validation("layer buffer size does not match its shape"));
            }
        }
        if self.layers[2].n_out != N_OUTPUTS {
            return Err(Error::validation("output layer must have 4 units"));
        }
        Ok(())
    }

    fn trace(&self, x: &SparseVector) -> Trace {
        let [l1, l2, l3] = &self.layers;
        let mut z1 = vec![0.0; l1.n_out];
        l1.forward_sparse(x, &mut z1);
        let h1 = relu(&z1);
        let mut z2 = vec![0.0; l2.n_out];
        l2.forward_dense(&h1, &mut z2);
        let h2 = relu(&z2);
        let mut logits = vec![0.0; l3.n_out];
        l3.forward_dense(&h2, &mut logits);
        Trace {
            z1,
            h1,
            z2,
            h2,
            probs: softmax(&logits),
        }
    }

    pub fn embed(&self, x: &SparseVector) -> Vec<f64> {
        self.trace(x).h2
    }

    pub fn predict_proba(&self, x: &SparseVector) -> Vec<f64> {
        self.trace(x).probs
    }

    /// Mean cross-entropy over the given samples.
    pub fn loss(&self, xs: &[SparseVector], ys: &[usize], batch: &[usize]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|&i| -self.trace(&xs[i]).probs[ys[i]].max(f64::MIN_POSITIVE).ln())
            .sum();
        total / batch.len() as f64
    }

    /// Mean cross-entropy and its gradient over `batch`.
    pub fn loss_and_gradients(&self, xs: &[SparseVector], ys: &[usize], batch: &[usize]) -> (f64, Gradients) {
        let mut g = Gradients::zeros(self);
        let scale = 1.0 / batch.len() as f64;
        let [l1, l2, l3] = &self.layers;
        let mut loss = 0.0;
        for &i in batch {
            let x = &xs[i];
            let t = self.trace(x);
            loss -= t.probs[ys[i]].max(f64::MIN_POSITIVE).ln();

            let mut d3 = t.probs.clone();
            d3[ys[i]] -= 1.0;
            for v in &mut d3 {
                *v *= scale;
            }
            accumulate(&mut g.weights[2], &mut g.bias[2], &t.h2, &d3);

            let mut d2 = backprop(l3, &d3);
            mask(&mut d2, &t.z2);
            accumulate(&mut g.weights[1], &mut g.bias[1], &t.h1, &d2);

            let mut d1 = backprop(l2, &d2);
            mask(&mut d1, &t.z1);
            for &(j, xj) in &x.entries {
                let row = &mut g.weights[0][j * l1.n_out..(j + 1) * l1.n_out];
                for (gw, d) in row.iter_mut().zip(&d1) {
                    *gw += xj * d;
                }
            }
            for (gb, d) in g.bias[0].iter_mut().zip(&d1) {
                *gb += d;
            }
        }
        (loss * scale, g)
    }
}

fn accumulate(gw: &mut [f64], gb: &mut [f64], input: &[f64], delta: &[f64]) {
    let n_out = delta.len();
    for (i, &a) in input.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (w, d) in gw[i * n_out..(i + 1) * n_out].iter_mut().zip(delta) {
            *w += a * d;
        }
    }
    for (b, d) in gb.iter_mut().zip(delta) {
        *b += d;
    }
}

/// Gradient with respect to the layer's input.
fn backprop(layer: &Dense, delta: &[f64]) -> Vec<f64> {
    (0..layer.n_in)
        .map(|i| {
            layer.weights[i * layer.n_out..(i + 1) * layer.n_out]
                .iter()
                .zip(delta)
                .map(|(w, d)| w * d)
                .sum()
        })
        .collect()
}

fn mask(delta: &mut [f64], z: &[f64]) {
    for (d, &zi) in delta.iter_mut().zip(z) {
        if zi <= 0.0 {
            *d = 0.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub hidden: [usize; 2],
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 20,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            hidden: DEFAULT_HIDDEN,
        }
    }
}

struct Adam {
    m: Gradients,
    v: Gradients,
    step: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        Adam {
            m: Gradients::zeros(net),
            v: Gradients::zeros(net),
            step: 0,
        }
    }

    fn update(&mut self, net: &mut Network, g: &Gradients, p: &TrainParams) {
        self.step += 1;
        let c1 = 1.0 - p.beta1.powi(self.step);
        let c2 = 1.0 - p.beta2.powi(self.step);
        for (k, layer) in net.layers.iter_mut().enumerate() {
            let pairs = [
                (
                    &mut layer.weights,
                    &g.weights[k],
                    &mut self.m.weights[k],
                    &mut self.v.weights[k],
                ),
                (&mut layer.bias, &g.bias[k], &mut self.m.bias[k], &mut self.v.bias[k]),
            ];
            for (param, grad, m, v) in pairs {
                for (((w, &gr), mi), vi) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *mi = p.beta1 * *mi + (1.0 - p.beta1) * gr;
                    *vi = p.beta2 * *vi + (1.0 - p.beta2) * gr * gr;
                    *w -= p.learning_rate * (*mi / c1) / ((*vi / c2).sqrt() + p.epsilon);
                }
            }
        }
    }
}

/// Full-training-set loss after each epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epoch_losses: Vec<f64>,
}

/// Trains a network on sparse inputs. Mini-batches are drawn from a
/// per-epoch shuffle of the sample order; a batch size at least the sample
/// count gives full-batch training.
pub fn train_network(
    xs: &[SparseVector],
    ys: &[PersonalityClass],
    params: &TrainParams,
    seed: u64,
) -> Result<(Network, TrainHistory)> {
    if xs.len() != ys.len() {
        return Err(Error::validation("inputs and labels differ in length"));
    }
    for class in PersonalityClass::ALL {
        if !ys.contains(&class) {
            return Err(Error::validation(format!("class {class} absent from training labels")));
        }
    }
    if params.batch_size == 0 {
        return Err(Error::validation("batch size must be positive"));
    }
    let n_in = xs[0].dim;
    if xs.iter().any(|x| x.dim != n_in) {
        return Err(Error::validation("inputs have inconsistent dimensions"));
    }
    let labels: Vec<usize> = ys.iter().map(|c| c.index()).collect();
    let mut net = Network::new(n_in, params.hidden, rng::derive_seed(seed, 0));
    let mut shuffle_rng = rng::seeded(rng::derive_seed(seed, 1));
    let mut adam = Adam::new(&net);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let all: Vec<usize> = order.clone();
    let mut history = TrainHistory::default();
    for _ in 0..params.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(params.batch_size) {
            let (_, g) = net.loss_and_gradients(xs, &labels, batch);
            adam.update(&mut net, &g, params);
        }
        history.epoch_losses.push(net.loss(xs, &labels, &all));
    }
    Ok((net, history))
}

/// A fitted tf-idf vocabulary plus the trained network over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityEmbedder {
    pub version: u32,
    pub tfidf: TfidfModel,
    pub network: Network,
    pub seed: u64,
    #[serde(default)]
    pub history: TrainHistory,
}

impl EntityEmbedder {
    /// Fits tf-idf on `docs` and trains the network to predict `classes`.
    pub fn train<S: AsRef<str>>(
        docs: &[Vec<S>],
        classes: &[PersonalityClass],
        min_df: f64,
        params: &TrainParams,
        seed: u64,
    ) -> Result<Self> {
        let tfidf = TfidfModel::fit(docs, min_df)?;
        let xs: Vec<SparseVector> = docs.iter().map(|d| tfidf.transform(d)).collect();
        let (network, history) = train_network(&xs, classes, params, seed)?;
        Ok(EntityEmbedder {
            version: EMBEDDER_FORMAT_VERSION,
            tfidf,
            network,
            seed,
            history,
        })
    }

    pub fn embedding_dim(&self) -> usize {
        self.network.embedding_dim()
    }

    /// Post-rectifier activations of the last hidden layer.
    pub fn embed<S: AsRef<str>>(&self, doc: &[S]) -> Vec<f64> {
        self.network.embed(&self.tfidf.transform(doc))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let e: EntityEmbedder = serde_json::from_str(text)?;
        if e.version != EMBEDDER_FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported embedder format version {}",
                e.version
            )));
        }
        e.network.check_shapes()?;
        if e.network.input_dim() != e.tfidf.dim() {
            return Err(Error::validation("network input does not match tf-idf vocabulary"));
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(n_per_class: usize) -> (Vec<Vec<String>>, Vec<PersonalityClass>) {
        let mut docs = Vec::new();
        let mut ys = Vec::new();
        for class in PersonalityClass::ALL {
            for i in 0..n_per_class {
                let c = class.index();
                docs.push(vec![format!("tag{c}"), format!("tag{c}b"), format!("noise{}", i % 3)]);
                ys.push(class);
            }
        }
        (docs, ys)
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let (docs, ys) = toy(5);
        let params = TrainParams {
            epochs: 0,
            ..Default::default()
        };
        let e = EntityEmbedder::train(&docs, &ys, 0.0, &params, 3).unwrap();
        let init = Network::new(e.tfidf.dim(), DEFAULT_HIDDEN, rng::derive_seed(3, 0));
        assert_eq!(e.network, init);
        assert!(e.network.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        let limit = (6.0 / (e.tfidf.dim() + 256) as f64).sqrt();
        assert!(e.network.layers[0].weights.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let (docs, ys) = toy(40);
        let e = EntityEmbedder::train(&docs, &ys, 0.02, &TrainParams::default(), 7).unwrap();
        let correct = docs
            .iter()
            .zip(&ys)
            .filter(|(d, y)| {
                let p = e.network.predict_proba(&e.tfidf.transform(d));
                let best = (0..4).fold(0, |b, k| if p[k] > p[b] { k } else { b });
                best == y.index()
            })
            .count();
        assert!(correct as f64 / docs.len() as f64 >= 0.99, "{correct}");
        assert_eq!(e.embedding_dim(), 64);
    }

    #[test]
    fn missing_class_is_rejected() {
        let (docs, mut ys) = toy(3);
        for y in &mut ys {
            if *y == PersonalityClass::Explorer {
                *y = PersonalityClass::Analyst;
            }
        }
        let err = EntityEmbedder::train(&docs, &ys, 0.0, &TrainParams::default(), 1).unwrap_err();
        assert!(err.to_string().contains("explorer"));
    }

    #[test]
    fn training_is_bit_reproducible() {
        let (docs, ys) = toy(10);
        let p = TrainParams {
            epochs: 3,
            ..Default::default()
        };
        let a = EntityEmbedder::train(&docs, &ys, 0.0, &p, 11).unwrap();
        let b = EntityEmbedder::train(&docs, &ys, 0.0, &p, 11).unwrap();
        assert_eq!(a, b);
        let json = a.to_json().unwrap();
        assert_eq!(EntityEmbedder::from_json(&json).unwrap(), a);
    }

    #[test]
    fn empty_doc_embeds_through_bias_path() {
        let (docs, ys) = toy(10);
        let p = TrainParams {
            epochs: 2,
            ..Default::default()
        };
        let e = EntityEmbedder::train(&docs, &ys, 0.0, &p, 2).unwrap();
        let empty: Vec<String> = Vec::new();
        let got = e.embed(&empty);
        let [l1, l2, _] = &e.network.layers;
        let h1: Vec<f64> = l1.bias.iter().map(|b| b.max(0.0)).collect();
        let want: Vec<f64> = (0..l2.n_out)
            .map(|o| {
                let z = l2.bias[o] + (0..l2.n_in).map(|i| h1[i] * l2.weights[i * l2.n_out + o]).sum::<f64>();
                z.max(0.0)
            })
            .collect();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        assert_eq!(e.embed(&docs[0]), e.embed(&docs[0]));
    }

    #[test]
    fn full_batch_loss_is_monotone() {
        let (docs, ys) = toy(10);
        let p = TrainParams {
            learning_rate: 1e-4,
            batch_size: docs.len(),
            epochs: 60,
            ..Default::default()
        };
        let e = EntityEmbedder::train(&docs, &ys, 0.0, &p, 5).unwrap();
        let l = &e.history.epoch_losses;
        assert!(l.windows(2).all(|w| w[1] <= w[0]), "{l:?}");
        assert!(l.last().unwrap() < &l[0]);
    }

    #[test]
    fn minibatch_loss_mostly_decreases() {
        let (docs, ys) = toy(40);
        let p = TrainParams {
            learning_rate: 1e-4,
            batch_size: 16,
            epochs: 30,
            ..Default::default()
        };
        let e = EntityEmbedder::train(&docs, &ys, 0.0, &p, 6).unwrap();
        let l = &e.history.epoch_losses;
        for w in l.windows(2) {
            assert!(w[1] <= w[0] * 1.05, "{l:?}");
        }
        assert!(l.last().unwrap() < &l[0]);
    }

    #[test]
    fn rejects_bad_serialized_shapes() {
        let (docs, ys) = toy(3);
        let p = TrainParams {
            epochs: 0,
            ..Default::default()
        };
        let mut e = EntityEmbedder::train(&docs, &ys, 0.0, &p, 1).unwrap();
        e.network.layers[1].bias.pop();
        assert!(EntityEmbedder::from_json(&e.to_json().unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(v in proptest::collection::vec(-500.0f64..500.0, 1..8)) {
            let p = softmax(&v);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }

        #[test]
        fn embeddings_are_non_negative(toks in proptest::collection::vec("tag[0-3]b?|noise[0-2]|zzz", 0..6)) {
            let (docs, ys) = toy(4);
            let p = TrainParams { epochs: 1, ..Default::default() };
            let e = EntityEmbedder::train(&docs, &ys, 0.0, &p, 9).unwrap();
            let emb = e.embed(&toks);
            prop_assert_eq!(emb.len(), 64);
            prop_assert!(emb.iter().all(|&v| v >= 0.0));
        }
    }
}
