//! Averaged-embedding pair features and two linear classifiers (multinomial
//! softmax and one-vs-rest hinge) trained by mini-batch gradient descent
//! over a [`Schedule`], logging per-epoch training dynamics.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cartography::DynamicsRecord;
use crate::curriculum::Schedule;
use crate::eval::macro_f1;
use crate::labeler::LabeledPair;
use crate::relation::Relation;
use crate::text::words;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("embeddings line {line}: {message}")]
    Embeddings { line: usize, message: String },
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch} (lr {lr}, |W| {weight_norm:.3e})")]
    NonFinite { epoch: usize, batch: usize, loss: f64, lr: f64, weight_norm: f64 },
    #[error("schedule is empty")]
    EmptySchedule,
    #[error("schedule references unknown example {0}")]
    UnknownExample(String),
    #[error("label {0} is not one of the model classes")]
    UnknownClass(Relation),
    #[error("{0}")]
    Shape(String),
    #[error("bad model file: {0}")]
    BadModel(String),
}

/// Read access to the two sentences of a pair.
pub trait PairText {
    fn premise(&self) -> &str;
    fn hypothesis(&self) -> &str;
}

impl PairText for LabeledPair {
    fn premise(&self) -> &str {
        &self.premise
    }
    fn hypothesis(&self) -> &str {
        &self.hypothesis
    }
}

impl PairText for (String, String) {
    fn premise(&self) -> &str {
        &self.0
    }
    fn hypothesis(&self) -> &str {
        &self.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum OovPolicy {
    /// Sum of seeded pseudo-random vectors of the token's character 3- to 5-grams,
    /// scaled to unit length.
    HashedNgrams {
        seed: u64,
    },
    Zero,
}

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
    pub oov: OovPolicy,
}

impl EmbeddingTable {
    /// A table with no stored vectors; every token goes through `oov`.
    pub fn empty(dim: usize, oov: OovPolicy) -> Self {
        EmbeddingTable { dim, vectors: HashMap::new(), oov }
    }

    /// Vector for `token`, resolving misses through the OOV policy.
    /// `None` means the zero vector.
    pub fn lookup(&self, token: &str) -> Option<Vec<f64>> {
        if let Some(v) = self.vectors.get(token) {
            return Some(v.clone());
        }
        match self.oov {
            OovPolicy::Zero => None,
            OovPolicy::HashedNgrams { seed } => Some(hashed_ngram_vector(token, self.dim, seed)),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hashed_ngram_vector(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let chars: Vec<char> = format!("<{token}>").chars().collect();
    let mut out = vec![0f64; dim];
    let mut count = 0usize;
    let scale = 1.0 / (dim as f64).sqrt();
    for n in 3..=5 {
        for gram in chars.windows(n) {
            let s: String = gram.iter().collect();
            let mut state = fnv1a(s.as_bytes()) ^ seed.rotate_left(17);
            for x in out.iter_mut() {
                let u = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64;
                *x += (2.0 * u - 1.0) * scale;
            }
            count += 1;
        }
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if count > 0 && norm > 0.0 {
        out.iter_mut().for_each(|x| *x /= norm);
    }
    out
}

/// Reads the word-vector text format: a `<count> <dim>` header, then one
/// token and `dim` numbers per line. Later duplicates replace earlier ones.
pub fn load_embeddings<R: BufRead>(input: R, oov: OovPolicy) -> Result<EmbeddingTable, TrainError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| TrainError::Embeddings { line: 1, message: "empty file".into() })??;
    let bad = |line: usize, message: String| TrainError::Embeddings { line, message };
    let mut parts = header.split_whitespace();
    let (count, dim) = match (parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(d), None) => (
            c.parse::<usize>().map_err(|e| bad(1, format!("count: {e}")))?,
            d.parse::<usize>().map_err(|e| bad(1, format!("dim: {e}")))?,
        ),
        _ => return Err(bad(1, "expected header `<count> <dim>`".into())),
    };
    if dim == 0 {
        return Err(bad(1, "dimension must be positive".into()));
    }
    let mut vectors = HashMap::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap_or_default().to_string();
        let values: Vec<f64> = parts
            .map(|p| p.parse::<f64>().map_err(|e| bad(line_no, format!("{p:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        if values.len() != dim {
            return Err(bad(line_no, format!("expected {dim} values, found {}", values.len())));
        }
        if vectors.insert(token.clone(), values).is_some() {
            log::warn!("embeddings line {line_no}: duplicate token {token:?}, keeping the later vector");
        }
    }
    if vectors.len() != count {
        log::warn!("embeddings header declares {count} tokens, read {}", vectors.len());
    }
    Ok(EmbeddingTable { dim, vectors, oov })
}

pub fn load_embeddings_file(path: &Path, oov: OovPolicy) -> Result<EmbeddingTable, TrainError> {
    load_embeddings(std::io::BufReader::new(std::fs::File::open(path)?), oov)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    Both,
    HypothesisOnly,
}

impl std::str::FromStr for FeatureMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(FeatureMode::Both),
            "hypothesis-only" => Ok(FeatureMode::HypothesisOnly),
            other => Err(format!("unknown feature mode {other:?} (expected both|hypothesis-only)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatures {
    pub pair_id: String,
    pub vector: Vec<f64>,
}

/// Mean token vector of a sentence; zero when no token resolves.
fn sentence_vector(text: &str, table: &EmbeddingTable, cache: &mut HashMap<String, Option<Vec<f64>>>) -> Vec<f64> {
    let mut sum = vec![0f64; table.dim];
    let mut n = 0usize;
    for tok in words(text) {
        n += 1;
        let v = cache.entry(tok).or_insert_with_key(|t| table.lookup(t));
        if let Some(v) = v {
            sum.iter_mut().zip(v.iter()).for_each(|(s, x)| *s += x);
        }
    }
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    sum
}

fn features_with_cache<P: PairText + ?Sized>(
    pair: &P,
    table: &EmbeddingTable,
    mode: FeatureMode,
    cache: &mut HashMap<String, Option<Vec<f64>>>,
) -> Vec<f64> {
    match mode {
        FeatureMode::HypothesisOnly => sentence_vector(pair.hypothesis(), table, cache),
        FeatureMode::Both => {
            let mut v = sentence_vector(pair.premise(), table, cache);
            v.extend(sentence_vector(pair.hypothesis(), table, cache));
            v
        }
    }
}

/// Feature vector of one pair: `[mean(premise), mean(hypothesis)]`, or
/// just the hypothesis mean in hypothesis-only mode.
pub fn featurize<P: PairText + ?Sized>(pair: &P, table: &EmbeddingTable, mode: FeatureMode) -> Vec<f64> {
    features_with_cache(pair, table, mode, &mut HashMap::new())
}

/// Features for many pairs, sharing the token cache.
pub fn featurize_all(pairs: &[LabeledPair], table: &EmbeddingTable, mode: FeatureMode) -> Vec<PairFeatures> {
    let mut cache = HashMap::new();
    pairs
        .iter()
        .map(|p| PairFeatures { pair_id: p.pair_id.clone(), vector: features_with_cache(p, table, mode, &mut cache) })
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Cosine similarity of the premise and hypothesis mean vectors.
pub fn pair_similarity<P: PairText + ?Sized>(pair: &P, table: &EmbeddingTable) -> f64 {
    let mut cache = HashMap::new();
    cosine(&sentence_vector(pair.premise(), table, &mut cache), &sentence_vector(pair.hypothesis(), table, &mut cache))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Softmax,
    LinearSvmOvr,
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "softmax" => Ok(ModelKind::Softmax),
            "svm" | "linear-svm-ovr" => Ok(ModelKind::LinearSvmOvr),
            other => Err(format!("unknown model {other:?} (expected softmax|svm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub lr: f64,
    /// Inverse regularization strength; the per-example l2 weight is `1 / (C n)`.
    pub c: f64,
    /// Stop when the epoch loss changes by less than this.
    pub tol: f64,
    /// Number of contiguous schedule segments treated as epochs.
    pub epochs: usize,
    pub max_epochs: usize,
    /// Epochs without validation macro-F1 improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn softmax() -> Self {
        TrainConfig {
            kind: ModelKind::Softmax,
            lr: 0.1,
            c: 1.0,
            tol: 1e-3,
            epochs: 10,
            max_epochs: 10,
            patience: 3,
            seed: 0,
        }
    }

    pub fn svm() -> Self {
        TrainConfig {
            kind: ModelKind::LinearSvmOvr,
            lr: 0.1,
            c: 0.5,
            tol: 1e-5,
            epochs: 10,
            max_epochs: 2500,
            patience: 3,
            seed: 0,
        }
    }

    pub fn for_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Softmax => Self::softmax(),
            ModelKind::LinearSvmOvr => Self::svm(),
        }
    }
}

/// How features were produced, so prediction can repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub mode: FeatureMode,
    pub dim: usize,
    pub oov: OovPolicy,
    /// Digest of the embedding file, `None` for hashed-only features.
    pub embeddings_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub kind: ModelKind,
    pub classes: Vec<Relation>,
    pub n_features: usize,
    /// Row-major `classes.len() x n_features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub config: TrainConfig,
    pub features: Option<FeatureSpec>,
}

impl ClassifierModel {
    pub fn zeros(kind: ModelKind, classes: &[Relation], n_features: usize, config: TrainConfig) -> Self {
        ClassifierModel {
            kind,
            classes: classes.to_vec(),
            n_features,
            weights: vec![0.0; classes.len() * n_features],
            bias: vec![0.0; classes.len()],
            config,
            features: None,
        }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        logits(&self.weights, &self.bias, x)
    }

    /// Class probabilities. For the hinge model these are a softmax over
    /// the one-vs-rest margins.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Most probable class (first in class order on ties) and probabilities.
    pub fn predict(&self, x: &[f64]) -> (Relation, Vec<f64>) {
        let p = self.probabilities(x);
        (self.classes[argmax(&p)], p)
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    fn class_index(&self, r: Relation) -> Result<usize, TrainError> {
        self.classes.iter().position(|c| *c == r).ok_or(TrainError::UnknownClass(r))
    }
}

fn logits(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let f = x.len();
    b.iter()
        .enumerate()
        .map(|(k, bk)| bk + w[k * f..(k + 1) * f].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean softmax cross-entropy over a batch plus `lambda / 2 * |W|^2`, with
/// its gradient `(dW, db)`.
pub fn softmax_objective(w: &[f64], b: &[f64], xs: &[&[f64]], ys: &[usize], lambda: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let k = b.len();
    let f = w.len() / k.max(1);
    let mut gw = vec![0f64; w.len()];
    let mut gb = vec![0f64; k];
    let mut loss = 0f64;
    let inv = 1.0 / xs.len() as f64;
    for (x, &y) in xs.iter().zip(ys) {
        let p = softmax(&logits(w, b, x));
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        for c in 0..k {
            let d = (p[c] - if c == y { 1.0 } else { 0.0 }) * inv;
            gb[c] += d;
            for (g, xi) in gw[c * f..(c + 1) * f].iter_mut().zip(x.iter()) {
                *g += d * xi;
            }
        }
    }
    let sq: f64 = w.iter().map(|v| v * v).sum();
    gw.iter_mut().zip(w).for_each(|(g, wi)| *g += lambda * wi);
    (loss * inv + 0.5 * lambda * sq, gw, gb)
}

/// Mean one-vs-rest hinge loss plus `lambda / 2 * |W|^2` and a subgradient.
pub fn hinge_objective(w: &[f64], b: &[f64], xs: &[&[f64]], ys: &[usize], lambda: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let k = b.len();
    let f = w.len() / k.max(1);
    let mut gw = vec![0f64; w.len()];
    let mut gb = vec![0f64; k];
    let mut loss = 0f64;
    let inv = 1.0 / xs.len() as f64;
    for (x, &y) in xs.iter().zip(ys) {
        let z = logits(w, b, x);
        for c in 0..k {
            let t = if c == y { 1.0 } else { -1.0 };
            let m = t * z[c];
            if m < 1.0 {
                loss += 1.0 - m;
                gb[c] -= t * inv;
                for (g, xi) in gw[c * f..(c + 1) * f].iter_mut().zip(x.iter()) {
                    *g -= t * xi * inv;
                }
            }
        }
    }
    let sq: f64 = w.iter().map(|v| v * v).sum();
    gw.iter_mut().zip(w).for_each(|(g, wi)| *g += lambda * wi);
    (loss * inv + 0.5 * lambda * sq, gw, gb)
}

/// Training examples: ids, feature vectors and gold labels, index-aligned.
#[derive(Debug, Clone, Copy)]
pub struct Dataset<'a> {
    pub ids: &'a [String],
    pub x: &'a [Vec<f64>],
    pub y: &'a [Relation],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub val_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    ScheduleEnd,
    MaxEpochs,
    Converged,
    Patience,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: ClassifierModel,
    pub dynamics: Vec<DynamicsRecord>,
    pub history: Vec<EpochStats>,
    pub stop: StopReason,
}

/// Batch ranges for `epochs` contiguous, near-equal schedule segments.
pub fn epoch_segments(n_batches: usize, epochs: usize) -> Vec<std::ops::Range<usize>> {
    let e = epochs.clamp(1, n_batches.max(1));
    (0..e).map(|i| i * n_batches / e..(i + 1) * n_batches / e).collect()
}

/// Runs the schedule's batches in order.
///
/// The schedule is cut into `config.epochs` contiguous segments (capped by
/// `max_epochs`). After each segment one dynamics record is logged for
/// every training example. Stopping rules (loss delta below `tol`,
/// validation macro-F1 patience) apply from the second epoch on; on a
/// patience stop the best validation weights are restored.
///
/// The l2 term is applied as an implicit step, `W <- (W - lr g) / (1 + lr lambda)`,
/// which stays stable for very small `C`.
pub fn train(
    data: Dataset<'_>,
    schedule: &Schedule,
    config: &TrainConfig,
    classes: &[Relation],
    val: Option<Dataset<'_>>,
    init: Option<ClassifierModel>,
) -> Result<TrainOutput, TrainError> {
    if schedule.batches.is_empty() || schedule.batches.iter().all(Vec::is_empty) {
        return Err(TrainError::EmptySchedule);
    }
    if data.ids.len() != data.x.len() || data.x.len() != data.y.len() {
        return Err(TrainError::Shape("ids, features and labels differ in length".into()));
    }
    let n_features = data.x.first().map_or(0, Vec::len);
    if data.x.iter().any(|v| v.len() != n_features) {
        return Err(TrainError::Shape("feature vectors differ in length".into()));
    }
    let mut model = match init {
        Some(m) => {
            if m.n_features != n_features || m.classes != classes {
                return Err(TrainError::Shape("initial model does not match data".into()));
            }
            ClassifierModel { config: config.clone(), kind: config.kind, ..m }
        }
        None => ClassifierModel::zeros(config.kind, classes, n_features, config.clone()),
    };
    let index: HashMap<&str, usize> = data.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let ys: Vec<usize> = data.y.iter().map(|y| model.class_index(*y)).collect::<Result<_, _>>()?;
    let batches: Vec<Vec<usize>> = schedule
        .batches
        .iter()
        .map(|b| {
            b.iter()
                .map(|id| index.get(id.as_str()).copied().ok_or_else(|| TrainError::UnknownExample(id.clone())))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let lambda = 1.0 / (config.c * data.ids.len().max(1) as f64);
    let segments = epoch_segments(batches.len(), config.epochs.min(config.max_epochs));
    let n_segments = segments.len();

    let mut dynamics = Vec::with_capacity(n_segments * data.ids.len());
    let mut history: Vec<EpochStats> = Vec::new();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut since_best = 0usize;
    let mut stop = if config.epochs > config.max_epochs { StopReason::MaxEpochs } else { StopReason::ScheduleEnd };

    for (epoch, seg) in segments.into_iter().enumerate() {
        let mut loss_sum = 0f64;
        let mut seen = 0usize;
        for bi in seg {
            let batch = &batches[bi];
            if batch.is_empty() {
                continue;
            }
            let xs: Vec<&[f64]> = batch.iter().map(|&i| data.x[i].as_slice()).collect();
            let yb: Vec<usize> = batch.iter().map(|&i| ys[i]).collect();
            // Data-term gradient only; the l2 part is applied implicitly below.
            let (loss, mut gw, gb) = match config.kind {
                ModelKind::Softmax => softmax_objective(&model.weights, &model.bias, &xs, &yb, lambda),
                ModelKind::LinearSvmOvr => hinge_objective(&model.weights, &model.bias, &xs, &yb, lambda),
            };
            if !loss.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch,
                    batch: bi,
                    loss,
                    lr: config.lr,
                    weight_norm: model.weight_norm(),
                });
            }
            gw.iter_mut().zip(&model.weights).for_each(|(g, w)| *g -= lambda * w);
            let shrink = 1.0 / (1.0 + config.lr * lambda);
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w = (*w - config.lr * g) * shrink;
            }
            for (b, g) in model.bias.iter_mut().zip(&gb) {
                *b -= config.lr * g;
            }
            loss_sum += loss;
            seen += 1;
        }

        let mut correct = 0usize;
        for (i, x) in data.x.iter().enumerate() {
            let (label, p) = model.predict(x);
            correct += usize::from(label == data.y[i]);
            dynamics.push(DynamicsRecord {
                example_id: data.ids[i].clone(),
                epoch: epoch as u32,
                gold_prob: p[ys[i]].clamp(0.0, 1.0),
                predicted_label: label,
            });
        }
        let val_f1 = match val {
            Some(v) => {
                let pred: Vec<Relation> = v.x.iter().map(|x| model.predict(x).0).collect();
                Some(macro_f1(v.y, &pred, classes).map_err(|e| TrainError::Shape(e.to_string()))?)
            }
            None => None,
        };
        let loss = if seen > 0 { loss_sum / seen as f64 } else { f64::NAN };
        log::info!(
            "epoch {epoch}: loss {loss:.6} train acc {:.4} val macro-F1 {val_f1:?}",
            correct as f64 / data.x.len().max(1) as f64
        );
        let prev_loss = history.last().map(|h| h.loss);
        history.push(EpochStats {
            epoch,
            loss,
            train_accuracy: correct as f64 / data.x.len().max(1) as f64,
            val_macro_f1: val_f1,
        });

        if let Some(f1) = val_f1 {
            if best.as_ref().is_none_or(|(b, _, _)| f1 > *b) {
                best = Some((f1, model.weights.clone(), model.bias.clone()));
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        if epoch + 1 < n_segments && epoch >= 1 {
            if let Some(prev) = prev_loss {
                if (prev - loss).abs() < config.tol {
                    stop = StopReason::Converged;
                    break;
                }
            }
            if val.is_some() && config.patience > 0 && since_best >= config.patience {
                stop = StopReason::Patience;
                let (_, w, b) = best.take().expect("patience implies a best epoch");
                model.weights = w;
                model.bias = b;
                break;
            }
        }
    }
    Ok(TrainOutput { model, dynamics, history, stop })
}

const MAGIC: &[u8; 8] = b"NLIFMDL\0";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    kind: ModelKind,
    classes: Vec<Relation>,
    n_features: usize,
    config: TrainConfig,
    features: Option<FeatureSpec>,
}

/// Binary layout: magic, format version (u32 LE), header length (u32 LE),
/// JSON header, then `K x F` weights and `K` biases as f64 LE, row-major.
pub fn write_model<W: Write>(model: &ClassifierModel, mut out: W) -> std::io::Result<()> {
    let header = ModelHeader {
        kind: model.kind,
        classes: model.classes.clone(),
        n_features: model.n_features,
        config: model.config.clone(),
        features: model.features.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    for v in model.weights.iter().chain(&model.bias) {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_model<R: Read>(mut input: R) -> Result<ClassifierModel, TrainError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(TrainError::BadModel("wrong magic bytes".into()));
    }
    let mut u32buf = [0u8; 4];
    input.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != FORMAT_VERSION {
        return Err(TrainError::BadModel(format!("unsupported format version {version}")));
    }
    input.read_exact(&mut u32buf)?;
    let mut json = vec![0u8; u32::from_le_bytes(u32buf) as usize];
    input.read_exact(&mut json)?;
    let h: ModelHeader = serde_json::from_slice(&json).map_err(|e| TrainError::BadModel(e.to_string()))?;
    let k = h.classes.len();
    let mut read_f64s = |n: usize| -> Result<Vec<f64>, TrainError> {
        let mut out = Vec::with_capacity(n);
        let mut b = [0u8; 8];
        for _ in 0..n {
            input.read_exact(&mut b)?;
            out.push(f64::from_le_bytes(b));
        }
        Ok(out)
    };
    let weights = read_f64s(k * h.n_features)?;
    let bias = read_f64s(k)?;
    Ok(ClassifierModel {
        kind: h.kind,
        classes: h.classes,
        n_features: h.n_features,
        weights,
        bias,
        config: h.config,
        features: h.features,
    })
}

/// Hex sha256 of the binary model encoding.
pub fn model_digest(model: &ClassifierModel) -> String {
    let mut buf = Vec::new();
    write_model(model, &mut buf).expect("writing to memory cannot fail");
    crate::config::hex(&Sha256::digest(&buf))
}

/// Human-readable export with weights as nested rows.
pub fn model_json(model: &ClassifierModel) -> serde_json::Value {
    let rows: Vec<&[f64]> = model.weights.chunks(model.n_features.max(1)).collect();
    serde_json::json!({
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "classes": model.classes,
        "n_features": model.n_features,
        "weights": rows,
        "bias": model.bias,
        "config": model.config,
        "features": model.features,
        "sha256": model_digest(model),
    })
}
