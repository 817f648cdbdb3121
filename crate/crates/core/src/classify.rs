//! One-vs-rest classifiers: class-weighted logistic regression and
//! multinomial naive Bayes, plus top-n recommendation.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::SparseVector;
use crate::labels::LabelMatrix;

/// Logits are clamped to this magnitude so scores stay strictly inside (0, 1).
const LOGIT_CLAMP: f64 = 36.0;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("topic {topic} has no positive repositories; apply the support filter first")]
    ZeroFrequency { topic: usize },
    #[error("loss became non-finite for topic {topic} at iteration {iteration}; try a smaller learning_rate")]
    Divergence { topic: usize, iteration: usize },
    #[error("negative feature value at row {row}, column {column}")]
    NegativeFeature { row: usize, column: usize },
    #[error("feature vector has column {got} but the model width is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("n must be in 1..={m}, got {n}")]
    BadN { n: usize, m: usize },
    #[error("{0}")]
    Shape(String),
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("topic {topic} has only one class in the training data")]
    DegenerateTopic { topic: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    #[default]
    Logistic,
    Mnb,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::Mnb => "mnb",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logistic" | "lr" => Ok(ClassifierKind::Logistic),
            "mnb" => Ok(ClassifierKind::Mnb),
            other => Err(format!("unknown classifier kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub l2: f64,
    pub tol: f64,
    pub seed: u64,
    /// `None` picks the per-kind default: on for logistic, off for MNB.
    pub use_class_weights: Option<bool>,
    /// Laplace smoothing for MNB.
    pub alpha: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            max_iters: 1000,
            l2: 1e-4,
            tol: 1e-6,
            seed: 42,
            use_class_weights: None,
            alpha: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::BadConfig(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad("tol must be > 0");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be >= 0");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be > 0");
        }
        Ok(())
    }

    pub fn class_weights_for(&self, kind: ClassifierKind) -> bool {
        self.use_class_weights.unwrap_or(kind == ClassifierKind::Logistic)
    }
}

/// Per-topic positive-example weights `N / frequency`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub weights: Vec<f64>,
}

impl ClassWeights {
    pub fn uniform(m: usize) -> Self {
        ClassWeights { weights: vec![1.0; m] }
    }
}

pub fn class_weight(n: u64, frequency: u64) -> f64 {
    n as f64 / frequency as f64
}

pub fn compute_class_weights(labels: &LabelMatrix) -> Result<ClassWeights, ClassifyError> {
    let n = labels.n_rows() as u64;
    let weights = labels
        .column_frequencies()
        .into_iter()
        .enumerate()
        .map(|(topic, f)| {
            if f == 0 {
                Err(ClassifyError::ZeroFrequency { topic })
            } else {
                Ok(class_weight(n, f))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(ClassWeights { weights })
}

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Weighted, L2-regularized binary cross-entropy of one topic:
/// `(1/n) Σ c_i (ln(1 + e^z_i) − y_i z_i) + (l2/2)‖w‖²` with `z_i = w·x_i + b`,
/// `c_i = pos_weight` for positives and 1 for negatives.
pub struct LogisticObjective<'a> {
    pub x: &'a [SparseVector],
    pub y: &'a [bool],
    pub width: usize,
    pub pos_weight: f64,
    pub l2: f64,
}

impl LogisticObjective<'_> {
    fn cost(&self, i: usize) -> f64 {
        if self.y[i] {
            self.pos_weight
        } else {
            1.0
        }
    }

    pub fn logits(&self, w: &[f64], b: f64) -> Vec<f64> {
        self.x.iter().map(|x| x.dot(w) + b).collect()
    }

    fn loss_from_logits(&self, z: &[f64], w: &[f64]) -> f64 {
        let n = self.x.len() as f64;
        let data: f64 = z
            .iter()
            .enumerate()
            .map(|(i, &z)| self.cost(i) * (softplus(z) - if self.y[i] { z } else { 0.0 }))
            .sum();
        data / n + 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient_from_logits(&self, z: &[f64], w: &[f64]) -> (Vec<f64>, f64) {
        let n = self.x.len() as f64;
        let mut gw: Vec<f64> = w.iter().map(|v| self.l2 * v).collect();
        let mut gb = 0.0;
        for (i, x) in self.x.iter().enumerate() {
            // Unclamped here so the gradient matches the loss exactly.
            let p = 1.0 / (1.0 + (-z[i]).exp());
            let g = self.cost(i) * (p - self.y[i] as u8 as f64) / n;
            gb += g;
            for (j, v) in x.iter() {
                gw[j] += g * v;
            }
        }
        (gw, gb)
    }

    pub fn loss(&self, w: &[f64], b: f64) -> f64 {
        self.loss_from_logits(&self.logits(w, b), w)
    }

    pub fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        self.gradient_from_logits(&self.logits(w, b), w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinaryLinearModel {
    pub fn zeros(width: usize) -> Self {
        BinaryLinearModel {
            weights: vec![0.0; width],
            bias: 0.0,
        }
    }

    pub fn logit(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }
}

/// Outcome of training one binary subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopicTrace {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
}

/// Full-batch gradient descent from zero. A step that would raise the loss
/// is discarded and training stops there.
pub fn train_binary_logistic(
    obj: &LogisticObjective<'_>,
    cfg: &TrainConfig,
    topic: usize,
) -> Result<(BinaryLinearModel, TopicTrace), ClassifyError> {
    let mut model = BinaryLinearModel::zeros(obj.width);
    let mut z = vec![0.0; obj.x.len()];
    let initial_loss = obj.loss_from_logits(&z, &model.weights);
    if !initial_loss.is_finite() {
        return Err(ClassifyError::Divergence { topic, iteration: 0 });
    }
    let mut loss = initial_loss;
    let mut iterations = 0;
    for iteration in 1..=cfg.max_iters {
        let (gw, gb) = obj.gradient_from_logits(&z, &model.weights);
        let weights: Vec<f64> = model
            .weights
            .iter()
            .zip(&gw)
            .map(|(w, g)| w - cfg.learning_rate * g)
            .collect();
        let bias = model.bias - cfg.learning_rate * gb;
        let new_z: Vec<f64> = obj.x.iter().map(|x| x.dot(&weights) + bias).collect();
        let new_loss = obj.loss_from_logits(&new_z, &weights);
        if !new_loss.is_finite() {
            return Err(ClassifyError::Divergence { topic, iteration });
        }
        if new_loss > loss {
            break;
        }
        let improvement = loss - new_loss;
        model = BinaryLinearModel { weights, bias };
        z = new_z;
        loss = new_loss;
        iterations = iteration;
        if improvement < cfg.tol {
            break;
        }
    }
    Ok((
        model,
        TopicTrace {
            initial_loss,
            final_loss: loss,
            iterations,
        },
    ))
}

/// Feature rows aligned with label rows, plus topic names in label order.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub features: &'a [SparseVector],
    pub width: usize,
    pub labels: &'a LabelMatrix,
    pub topics: &'a [String],
}

impl TrainingData<'_> {
    fn check(&self) -> Result<(), ClassifyError> {
        if self.features.len() != self.labels.n_rows() {
            return Err(ClassifyError::Shape(format!(
                "{} feature rows but {} label rows",
                self.features.len(),
                self.labels.n_rows()
            )));
        }
        if self.topics.len() != self.labels.n_topics() {
            return Err(ClassifyError::Shape(format!(
                "{} topic names but {} label columns",
                self.topics.len(),
                self.labels.n_topics()
            )));
        }
        if self.features.is_empty() {
            return Err(ClassifyError::Shape("no training rows".into()));
        }
        if let Some(got) = self.features.iter().map(SparseVector::min_width).max() {
            if got > self.width {
                return Err(ClassifyError::DimensionMismatch {
                    expected: self.width,
                    got: got - 1,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbTopicModel {
    pub log_prior_neg: f64,
    pub log_prior_pos: f64,
    pub log_likelihood_neg: Vec<f64>,
    pub log_likelihood_pos: Vec<f64>,
}

impl MnbTopicModel {
    /// Log-odds of the positive class.
    pub fn log_odds(&self, x: &SparseVector) -> f64 {
        let mut d = self.log_prior_pos - self.log_prior_neg;
        for (j, v) in x.iter() {
            d += v * (self.log_likelihood_pos[j] - self.log_likelihood_neg[j]);
        }
        d
    }

    /// Normalized (negative, positive) posteriors.
    pub fn posteriors(&self, x: &SparseVector) -> (f64, f64) {
        let d = self.log_odds(x);
        (sigmoid(-d), sigmoid(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "per_topic", rename_all = "snake_case")]
pub enum TopicModels {
    Logistic(Vec<BinaryLinearModel>),
    Mnb(Vec<MnbTopicModel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub topics: Vec<String>,
    pub width: usize,
    pub train_config: TrainConfig,
    pub class_weighted: bool,
    pub models: TopicModels,
    #[serde(default)]
    pub traces: Vec<TopicTrace>,
}

impl OvrModel {
    pub fn kind(&self) -> ClassifierKind {
        match self.models {
            TopicModels::Logistic(_) => ClassifierKind::Logistic,
            TopicModels::Mnb(_) => ClassifierKind::Mnb,
        }
    }

    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    /// Checks that every per-topic table matches the topic count and width
    /// and holds only finite numbers.
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let m = self.topics.len();
        let (count, ok) = match &self.models {
            TopicModels::Logistic(ms) => (
                ms.len(),
                ms.iter().all(|t| {
                    t.weights.len() == self.width && t.bias.is_finite() && t.weights.iter().all(|v| v.is_finite())
                }),
            ),
            TopicModels::Mnb(ms) => (
                ms.len(),
                ms.iter().all(|t| {
                    t.log_likelihood_neg.len() == self.width
                        && t.log_likelihood_pos.len() == self.width
                        && t.log_prior_neg.is_finite()
                        && t.log_prior_pos.is_finite()
                        && t.log_likelihood_neg
                            .iter()
                            .chain(&t.log_likelihood_pos)
                            .all(|v| v.is_finite())
                }),
            ),
        };
        if count != m {
            return Err(ClassifyError::Shape(format!("{count} per-topic models for {m} topics")));
        }
        if !ok {
            return Err(ClassifyError::Shape(format!(
                "per-topic parameters must have width {} and be finite",
                self.width
            )));
        }
        Ok(())
    }
}

fn resolve_weights(data: &TrainingData<'_>, weights: Option<&ClassWeights>) -> Result<Vec<f64>, ClassifyError> {
    match weights {
        Some(w) if w.weights.len() != data.topics.len() => Err(ClassifyError::Shape(format!(
            "{} class weights for {} topics",
            w.weights.len(),
            data.topics.len()
        ))),
        Some(w) => Ok(w.weights.clone()),
        None => Ok(vec![1.0; data.topics.len()]),
    }
}

/// Trains one logistic model per topic. Topics are independent and train in
/// parallel; the result does not depend on thread scheduling.
pub fn train_logistic_ovr(
    data: TrainingData<'_>,
    weights: Option<&ClassWeights>,
    cfg: &TrainConfig,
) -> Result<OvrModel, ClassifyError> {
    cfg.validate()?;
    data.check()?;
    let pos_weights = resolve_weights(&data, weights)?;
    let results: Vec<(BinaryLinearModel, TopicTrace)> = (0..data.topics.len())
        .into_par_iter()
        .map(|t| {
            let y = data.labels.column(t);
            let obj = LogisticObjective {
                x: data.features,
                y: &y,
                width: data.width,
                pos_weight: pos_weights[t],
                l2: cfg.l2,
            };
            train_binary_logistic(&obj, cfg, t)
        })
        .collect::<Result<_, _>>()?;
    let (models, traces) = results.into_iter().unzip();
    Ok(OvrModel {
        topics: data.topics.to_vec(),
        width: data.width,
        train_config: *cfg,
        class_weighted: weights.is_some(),
        models: TopicModels::Logistic(models),
        traces,
    })
}

/// Binary multinomial naive Bayes per topic with Laplace smoothing over
/// fractional feature counts. Optional class weights scale the positive
/// examples' counts and prior mass.
pub fn train_mnb_ovr(
    data: TrainingData<'_>,
    weights: Option<&ClassWeights>,
    cfg: &TrainConfig,
) -> Result<OvrModel, ClassifyError> {
    cfg.validate()?;
    data.check()?;
    for (row, x) in data.features.iter().enumerate() {
        if let Some((column, _)) = x.iter().find(|(_, v)| *v < 0.0) {
            return Err(ClassifyError::NegativeFeature { row, column });
        }
    }
    let pos_weights = resolve_weights(&data, weights)?;
    let mut totals = vec![0.0; data.width];
    for x in data.features {
        for (j, v) in x.iter() {
            totals[j] += v;
        }
    }
    let width = data.width as f64;
    let alpha = cfg.alpha;
    let models: Vec<MnbTopicModel> = (0..data.topics.len())
        .into_par_iter()
        .map(|t| {
            let c = pos_weights[t];
            let mut pos = vec![0.0; data.width];
            let mut n_pos = 0usize;
            for (i, x) in data.features.iter().enumerate() {
                if data.labels.get(i, t) {
                    n_pos += 1;
                    for (j, v) in x.iter() {
                        pos[j] += v;
                    }
                }
            }
            let n_neg = data.features.len() - n_pos;
            if n_pos == 0 || n_neg == 0 {
                return Err(ClassifyError::DegenerateTopic { topic: t });
            }
            let neg: Vec<f64> = totals.iter().zip(&pos).map(|(a, p)| (a - p).max(0.0)).collect();
            let pos: Vec<f64> = pos.into_iter().map(|p| c * p).collect();
            let ll = |counts: &[f64]| {
                let denom = (counts.iter().sum::<f64>() + alpha * width).ln();
                counts.iter().map(|n| (n + alpha).ln() - denom).collect::<Vec<_>>()
            };
            let mass_pos = c * n_pos as f64;
            let mass_neg = n_neg as f64;
            let total = mass_pos + mass_neg;
            Ok(MnbTopicModel {
                log_prior_neg: (mass_neg / total).ln(),
                log_prior_pos: (mass_pos / total).ln(),
                log_likelihood_neg: ll(&neg),
                log_likelihood_pos: ll(&pos),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(OvrModel {
        topics: data.topics.to_vec(),
        width: data.width,
        train_config: *cfg,
        class_weighted: weights.is_some(),
        models: TopicModels::Mnb(models),
        traces: Vec::new(),
    })
}

/// Trains the requested classifier, computing class weights when the
/// configuration asks for them.
pub fn train_ovr(kind: ClassifierKind, data: TrainingData<'_>, cfg: &TrainConfig) -> Result<OvrModel, ClassifyError> {
    let weights = if cfg.class_weights_for(kind) {
        Some(compute_class_weights(data.labels)?)
    } else {
        None
    };
    match kind {
        ClassifierKind::Logistic => train_logistic_ovr(data, weights.as_ref(), cfg),
        ClassifierKind::Mnb => train_mnb_ovr(data, weights.as_ref(), cfg),
    }
}

/// Per-topic scores in (0, 1), in topic order.
pub fn predict_scores(model: &OvrModel, x: &SparseVector) -> Result<Vec<f64>, ClassifyError> {
    if x.min_width() > model.width {
        return Err(ClassifyError::DimensionMismatch {
            expected: model.width,
            got: x.min_width() - 1,
        });
    }
    Ok(match &model.models {
        TopicModels::Logistic(ms) => ms.iter().map(|m| sigmoid(m.logit(x))).collect(),
        TopicModels::Mnb(ms) => ms.iter().map(|m| sigmoid(m.log_odds(x))).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub topic: String,
    pub score: f64,
}

/// Topic indices ordered by descending score, ties by ascending topic name.
pub fn rank_topics<S: AsRef<str>>(scores: &[f64], topics: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| topics[a].as_ref().cmp(topics[b].as_ref()))
    });
    order
}

pub fn recommend<S: AsRef<str>>(scores: &[f64], n: usize, topics: &[S]) -> Result<Vec<Recommendation>, ClassifyError> {
    let m = topics.len();
    if scores.len() != m {
        return Err(ClassifyError::Shape(format!("{} scores for {m} topics", scores.len())));
    }
    if n == 0 || n > m {
        return Err(ClassifyError::BadN { n, m });
    }
    Ok(rank_topics(scores, topics)
        .into_iter()
        .take(n)
        .map(|i| Recommendation {
            topic: topics[i].as_ref().to_string(),
            score: scores[i],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::LabelVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sv(pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    fn labels(rows: &[&[usize]], m: usize) -> LabelMatrix {
        LabelMatrix::new(
            m,
            rows.iter()
                .map(|r| LabelVector::from_indices(m, r.iter().copied()))
                .collect(),
        )
        .unwrap()
    }

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn class_weight_values() {
        assert_eq!(class_weight(1000, 50), 20.0);
        assert_eq!(class_weight(100, 25), 4.0);
        assert_eq!(class_weight(7, 7), 1.0);
        let l = labels(&[&[0], &[0, 1], &[0], &[0]], 3);
        assert_eq!(
            compute_class_weights(&l),
            Err(ClassifyError::ZeroFrequency { topic: 2 })
        );
        let l = labels(&[&[0], &[0, 1], &[0], &[0]], 2);
        assert_eq!(compute_class_weights(&l).unwrap().weights, vec![1.0, 4.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..100 {
            let width = rng.random_range(1..6);
            let n = rng.random_range(1..8);
            let x: Vec<SparseVector> = (0..n)
                .map(|_| {
                    let mut pairs = Vec::new();
                    for j in 0..width {
                        if rng.random_bool(0.6) {
                            pairs.push((j, rng.random_range(0.05..1.0)));
                        }
                    }
                    sv(&pairs)
                })
                .collect();
            let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            let obj = LogisticObjective {
                x: &x,
                y: &y,
                width,
                pos_weight: rng.random_range(1.0..20.0),
                l2: rng.random_range(0.0..0.1),
            };
            let w: Vec<f64> = (0..width).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            let (gw, gb) = obj.gradient(&w, b);
            let mut numeric = Vec::new();
            for j in 0..width {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[j] += h;
                wm[j] -= h;
                numeric.push((obj.loss(&wp, b) - obj.loss(&wm, b)) / (2.0 * h));
            }
            numeric.push((obj.loss(&w, b + h) - obj.loss(&w, b - h)) / (2.0 * h));
            let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
            let diff: f64 = analytic
                .iter()
                .zip(&numeric)
                .map(|(a, n)| (a - n).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = analytic
                .iter()
                .map(|a| a * a)
                .sum::<f64>()
                .sqrt()
                .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
            assert!(diff / scale.max(1e-8) < 1e-4, "relative error {}", diff / scale);
        }
    }

    fn toy() -> (Vec<SparseVector>, LabelMatrix) {
        let x = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)]), sv(&[(0, 1.0)]), sv(&[(1, 1.0)])];
        (x, labels(&[&[0], &[], &[0], &[]], 1))
    }

    #[test]
    fn separable_toy_set() {
        let (x, l) = toy();
        let topics = names(1);
        let data = TrainingData {
            features: &x,
            width: 2,
            labels: &l,
            topics: &topics,
        };
        let model = train_logistic_ovr(data, None, &TrainConfig::default()).unwrap();
        assert!(predict_scores(&model, &x[0]).unwrap()[0] > 0.9);
        assert!(predict_scores(&model, &x[1]).unwrap()[0] < 0.1);
        let trace = model.traces[0];
        assert!(trace.final_loss <= trace.initial_loss);
    }

    #[test]
    fn zero_model_scores_half() {
        let model = OvrModel {
            topics: names(3),
            width: 4,
            train_config: TrainConfig::default(),
            class_weighted: false,
            models: TopicModels::Logistic(vec![BinaryLinearModel::zeros(4); 3]),
            traces: vec![],
        };
        assert_eq!(predict_scores(&model, &SparseVector::default()).unwrap(), vec![0.5; 3]);
        let err = predict_scores(&model, &sv(&[(4, 1.0)])).unwrap_err();
        assert_eq!(err, ClassifyError::DimensionMismatch { expected: 4, got: 4 });
    }

    #[test]
    fn scores_stay_inside_unit_interval() {
        assert!(sigmoid(1e6) < 1.0);
        assert!(sigmoid(-1e6) > 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn divergence_is_reported() {
        let x = vec![sv(&[(0, f64::NAN)])];
        let l = labels(&[&[0]], 1);
        let topics = names(1);
        let data = TrainingData {
            features: &x,
            width: 1,
            labels: &l,
            topics: &topics,
        };
        let err = train_logistic_ovr(data, None, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, ClassifyError::Divergence { topic: 0, .. }));
    }

    #[test]
    fn mnb_hand_computation() {
        // Two features, three docs: d0 = (2, 0) positive, d1 = (0, 1) negative,
        // d2 = (1, 1) negative. Alpha = 1.
        let x = vec![sv(&[(0, 2.0)]), sv(&[(1, 1.0)]), sv(&[(0, 1.0), (1, 1.0)])];
        let l = labels(&[&[0], &[], &[]], 1);
        let topics = names(1);
        let data = TrainingData {
            features: &x,
            width: 2,
            labels: &l,
            topics: &topics,
        };
        let model = train_mnb_ovr(data, None, &TrainConfig::default()).unwrap();
        // pos counts (2, 0) → θ = (3/4, 1/4); neg counts (1, 2) → θ = (2/5, 3/5).
        let probe = sv(&[(0, 1.0), (1, 2.0)]);
        let pos = (1.0f64 / 3.0) * (3.0f64 / 4.0) * (1.0f64 / 4.0).powi(2);
        let neg = (2.0f64 / 3.0) * (2.0f64 / 5.0) * (3.0f64 / 5.0).powi(2);
        let expected = pos / (pos + neg);
        let TopicModels::Mnb(ms) = &model.models else { panic!() };
        let (pn, pp) = ms[0].posteriors(&probe);
        assert!((pp - expected).abs() < 1e-12);
        assert!((pn + pp - 1.0).abs() < 1e-12);
        assert!(predict_scores(&model, &x[0]).unwrap()[0] > 0.5);

        let bad = vec![sv(&[(0, -1.0)]), sv(&[(1, 1.0)])];
        let l = labels(&[&[0], &[]], 1);
        let data = TrainingData {
            features: &bad,
            width: 2,
            labels: &l,
            topics: &topics,
        };
        assert_eq!(
            train_mnb_ovr(data, None, &TrainConfig::default()).unwrap_err(),
            ClassifyError::NegativeFeature { row: 0, column: 0 }
        );
    }

    #[test]
    fn mnb_uniform_data_gives_prior() {
        let x = vec![sv(&[(0, 0.6), (1, 0.8)]); 4];
        let l = labels(&[&[0], &[0], &[0], &[]], 1);
        let topics = names(1);
        let data = TrainingData {
            features: &x,
            width: 2,
            labels: &l,
            topics: &topics,
        };
        let model = train_mnb_ovr(data, None, &TrainConfig::default()).unwrap();
        let s = predict_scores(&model, &x[0]).unwrap()[0];
        // Smoothing shifts the two likelihoods slightly, so only approximately the prior.
        assert!((s - 0.75).abs() < 0.01, "{s}");
    }

    #[test]
    fn larger_l2_never_grows_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<SparseVector> = (0..30)
            .map(|_| sv(&(0..4).map(|j| (j, rng.random_range(0.0..1.0))).collect::<Vec<_>>()))
            .collect();
        let rows: Vec<Vec<usize>> = x
            .iter()
            .map(|v| {
                if v.values[0] + 0.3 * rng.random_range(-1.0..1.0) > 0.5 {
                    vec![0]
                } else {
                    vec![]
                }
            })
            .collect();
        let refs: Vec<&[usize]> = rows.iter().map(Vec::as_slice).collect();
        let l = labels(&refs, 1);
        let topics = names(1);
        let data = TrainingData {
            features: &x,
            width: 4,
            labels: &l,
            topics: &topics,
        };
        let mut last = f64::INFINITY;
        for l2 in [0.01, 0.02, 0.04, 0.08, 0.16] {
            let cfg = TrainConfig {
                l2,
                learning_rate: 1.0,
                max_iters: 50_000,
                tol: 1e-14,
                ..Default::default()
            };
            let m = train_logistic_ovr(data, None, &cfg).unwrap();
            let TopicModels::Logistic(ms) = &m.models else { panic!() };
            let norm = ms[0].weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            assert!(norm <= last + 1e-9, "l2 {l2}: {norm} > {last}");
            last = norm;
        }
    }

    #[test]
    fn parallel_training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<SparseVector> = (0..40)
            .map(|_| sv(&(0..6).map(|j| (j, rng.random_range(0.0..1.0))).collect::<Vec<_>>()))
            .collect();
        let rows: Vec<Vec<usize>> = (0..40)
            .map(|i| (0..5).filter(|t| (i + t) % (t + 2) == 0).collect())
            .collect();
        let refs: Vec<&[usize]> = rows.iter().map(Vec::as_slice).collect();
        let l = labels(&refs, 5);
        let topics = names(5);
        let data = TrainingData {
            features: &x,
            width: 6,
            labels: &l,
            topics: &topics,
        };
        let a = train_ovr(ClassifierKind::Logistic, data, &TrainConfig::default()).unwrap();
        let b = train_ovr(ClassifierKind::Logistic, data, &TrainConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.class_weighted);
        // Sequential reference for one topic.
        let y = l.column(3);
        let w = compute_class_weights(&l).unwrap();
        let obj = LogisticObjective {
            x: &x,
            y: &y,
            width: 6,
            pos_weight: w.weights[3],
            l2: 1e-4,
        };
        let (seq, _) = train_binary_logistic(&obj, &TrainConfig::default(), 3).unwrap();
        let TopicModels::Logistic(ms) = &a.models else { panic!() };
        assert_eq!(ms[3], seq);
    }

    #[test]
    fn recommend_ties_and_range() {
        let topics = ["a", "b", "c"];
        let r = recommend(&[0.9, 0.2, 0.9], 2, &topics).unwrap();
        assert_eq!(r.iter().map(|r| r.topic.as_str()).collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(recommend(&[0.9, 0.2, 0.9], 3, &topics).unwrap().len(), 3);
        assert_eq!(
            recommend(&[0.1; 3], 0, &topics).unwrap_err(),
            ClassifyError::BadN { n: 0, m: 3 }
        );
        assert!(recommend(&[0.1; 3], 4, &topics).is_err());
    }

    proptest! {
        #[test]
        fn recommend_is_prefix_closed(scores in proptest::collection::vec(0.0f64..1.0, 2..12)) {
            let topics = names(scores.len());
            let quantized: Vec<f64> = scores.iter().map(|s| (s * 4.0).round() / 4.0).collect();
            for n in 1..quantized.len() {
                let a = recommend(&quantized, n, &topics).unwrap();
                let b = recommend(&quantized, n + 1, &topics).unwrap();
                prop_assert_eq!(&a[..], &b[..n]);
                prop_assert!(a.windows(2).all(|w| w[0].score >= w[1].score));
            }
        }
    }
}
