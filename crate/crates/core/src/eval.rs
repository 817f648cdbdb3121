//! Ranking metrics, evaluation reports and corpus statistics.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{predict_scores, rank_topics, ClassifyError, OvrModel};
use crate::features::SparseVector;
use crate::labels::LabelMatrix;
use crate::textprep::{ProcessedDoc, Source};
use crate::topicnorm::coverage_curve;

pub const DEFAULT_NS: [usize; 5] = [1, 3, 5, 8, 10];

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("row {0} has no true topics")]
    EmptyTruthRow(usize),
    #[error("non-finite score at row {row}, topic {topic}")]
    NonFinite { row: usize, topic: usize },
    #[error("n must be at least 1")]
    ZeroN,
    #[error("nothing to evaluate: {0}")]
    Empty(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// Per-row topic scores with the topic names used to break ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    topics: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(topics: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, EvalError> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != topics.len() {
                return Err(EvalError::Shape(format!(
                    "score row {r} has {} entries for {} topics",
                    row.len(),
                    topics.len()
                )));
            }
            if let Some(t) = row.iter().position(|v| !v.is_finite()) {
                return Err(EvalError::NonFinite { row: r, topic: t });
            }
        }
        Ok(ScoreMatrix { topics, rows })
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn select_rows(&self, indices: &[usize]) -> ScoreMatrix {
        ScoreMatrix {
            topics: self.topics.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Topic indices of row `r` in recommendation order.
    pub fn ranking(&self, r: usize) -> Vec<usize> {
        rank_topics(&self.rows[r], &self.topics)
    }
}

fn check(scores: &ScoreMatrix, truth: &LabelMatrix) -> Result<(), EvalError> {
    if scores.n_rows() != truth.n_rows() || scores.topics.len() != truth.n_topics() {
        return Err(EvalError::Shape(format!(
            "scores are {}x{}, truth is {}x{}",
            scores.n_rows(),
            scores.topics.len(),
            truth.n_rows(),
            truth.n_topics()
        )));
    }
    if scores.n_rows() == 0 {
        return Err(EvalError::Empty("no rows".into()));
    }
    if let Some(r) = truth.rows().iter().position(|r| r.count() == 0) {
        return Err(EvalError::EmptyTruthRow(r));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtN {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub success: f64,
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision, recall and success over the top-`n` of every row, averaged over
/// rows. Precision divides hits by `n` even when fewer than `n` topics exist.
/// F1 is the harmonic mean of the averaged precision and recall.
pub fn metrics_at_n(scores: &ScoreMatrix, truth: &LabelMatrix, n: usize) -> Result<AtN, EvalError> {
    check(scores, truth)?;
    if n == 0 {
        return Err(EvalError::ZeroN);
    }
    let (mut p, mut r, mut s) = (0.0, 0.0, 0.0);
    for row in 0..scores.n_rows() {
        let t = truth.row(row);
        let hits = scores.ranking(row).into_iter().take(n).filter(|&i| t.get(i)).count();
        p += hits as f64 / n as f64;
        r += hits as f64 / t.count() as f64;
        if hits > 0 {
            s += 1.0;
        }
    }
    let rows = scores.n_rows() as f64;
    let (precision, recall, success) = (p / rows, r / rows, s / rows);
    Ok(AtN {
        n,
        precision,
        recall,
        f1: harmonic_mean(precision, recall),
        success,
    })
}

/// Label ranking average precision. For every true topic `j` of a row,
/// `|{k true: s_k >= s_j}| / |{k: s_k >= s_j}|`, averaged over the row's true
/// topics and then over rows.
pub fn lrap(scores: &ScoreMatrix, truth: &LabelMatrix) -> Result<f64, EvalError> {
    check(scores, truth)?;
    let mut total = 0.0;
    for (row, s) in scores.rows.iter().enumerate() {
        let t = truth.row(row);
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        let mut sum = 0.0;
        let (mut seen, mut seen_true) = (0usize, 0usize);
        let mut i = 0;
        while i < order.len() {
            // All topics tied at this score share the rank of the group's end.
            let mut end = i;
            while end < order.len() && s[order[end]] == s[order[i]] {
                end += 1;
            }
            let group_true = order[i..end].iter().filter(|&&k| t.get(k)).count();
            seen += end - i;
            seen_true += group_true;
            sum += group_true as f64 * (seen_true as f64 / seen as f64);
            i = end;
        }
        total += sum / t.count() as f64;
    }
    Ok(total / scores.n_rows() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMetrics {
    pub topic: String,
    pub precision: f64,
    pub recall: f64,
    pub support: u64,
}

/// Per-topic precision and recall of the top-`n` recommendation lists.
/// A topic never recommended has precision 0.
pub fn per_topic_metrics(scores: &ScoreMatrix, truth: &LabelMatrix, n: usize) -> Result<Vec<TopicMetrics>, EvalError> {
    check(scores, truth)?;
    let m = scores.topics.len();
    let mut predicted = vec![0u64; m];
    let mut hits = vec![0u64; m];
    for row in 0..scores.n_rows() {
        for i in scores.ranking(row).into_iter().take(n) {
            predicted[i] += 1;
            if truth.get(row, i) {
                hits[i] += 1;
            }
        }
    }
    let support = truth.column_frequencies();
    Ok((0..m)
        .map(|i| TopicMetrics {
            topic: scores.topics[i].clone(),
            precision: if predicted[i] == 0 {
                0.0
            } else {
                hits[i] as f64 / predicted[i] as f64
            },
            recall: if support[i] == 0 {
                0.0
            } else {
                hits[i] as f64 / support[i] as f64
            },
            support: support[i],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub ns: Vec<usize>,
    /// List length used for the per-topic table.
    pub per_topic_n: usize,
    /// Number of single-row predictions timed for the latency figure.
    pub timed_predictions: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ns: DEFAULT_NS.to_vec(),
            per_topic_n: 5,
            timed_predictions: 1000,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err("metric n values must be >= 1 and non-empty".into());
        }
        if self.per_topic_n == 0 {
            return Err("per_topic_n must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_rows: usize,
    /// Rows left out because they have no true topic.
    pub excluded_rows: usize,
    pub at_n: Vec<AtN>,
    pub lrap: f64,
    pub per_topic: Vec<TopicMetrics>,
    pub coverage_curve: Vec<(usize, f64)>,
}

impl MetricsReport {
    pub fn at(&self, n: usize) -> Option<&AtN> {
        self.at_n.iter().find(|a| a.n == n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned-column text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "rows evaluated: {} (excluded without topics: {})",
            self.n_rows, self.excluded_rows
        );
        let _ = writeln!(out, "LRAP: {:.4}", self.lrap);
        let _ = writeln!(
            out,
            "{:>4}  {:>9}  {:>9}  {:>9}  {:>9}",
            "n", "precision", "recall", "f1", "success"
        );
        for a in &self.at_n {
            let _ = writeln!(
                out,
                "{:>4}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.4}",
                a.n, a.precision, a.recall, a.f1, a.success
            );
        }
        let width = self.per_topic.iter().map(|t| t.topic.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(
            out,
            "\n{:<width$}  {:>9}  {:>9}  {:>7}",
            "topic", "precision", "recall", "support"
        );
        for t in &self.per_topic {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>7}",
                t.topic, t.precision, t.recall, t.support
            );
        }
        out
    }
}

/// Wall-clock figures, kept apart from [`MetricsReport`] so reports compare
/// equal across runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub train_seconds: f64,
    pub mean_prediction_micros: f64,
    pub timed_predictions: usize,
}

/// Builds the report from precomputed scores. Rows without true topics are
/// excluded and counted.
pub fn report_from_scores(
    scores: &ScoreMatrix,
    truth: &LabelMatrix,
    coverage_frequencies: &[u64],
    cfg: &EvalConfig,
) -> Result<MetricsReport, EvalError> {
    cfg.validate().map_err(EvalError::Shape)?;
    if scores.n_rows() != truth.n_rows() {
        return Err(EvalError::Shape(format!(
            "{} score rows for {} truth rows",
            scores.n_rows(),
            truth.n_rows()
        )));
    }
    let keep: Vec<usize> = (0..truth.n_rows()).filter(|&r| truth.row(r).count() > 0).collect();
    let excluded_rows = truth.n_rows() - keep.len();
    if excluded_rows > 0 {
        log::info!("excluding {excluded_rows} evaluation rows without true topics");
    }
    if keep.is_empty() {
        return Err(EvalError::Empty("no evaluation rows with true topics".into()));
    }
    let scores = scores.select_rows(&keep);
    let truth = truth.select_rows(&keep);
    let at_n = cfg
        .ns
        .iter()
        .map(|&n| metrics_at_n(&scores, &truth, n))
        .collect::<Result<_, _>>()?;
    let coverage_curve = if coverage_frequencies.iter().any(|&f| f > 0) {
        coverage_curve(coverage_frequencies).map_err(|e| EvalError::Shape(e.to_string()))?
    } else {
        Vec::new()
    };
    Ok(MetricsReport {
        n_rows: keep.len(),
        excluded_rows,
        at_n,
        lrap: lrap(&scores, &truth)?,
        per_topic: per_topic_metrics(&scores, &truth, cfg.per_topic_n)?,
        coverage_curve,
    })
}

pub fn score_rows(model: &OvrModel, features: &[SparseVector]) -> Result<ScoreMatrix, EvalError> {
    let rows = features
        .iter()
        .map(|x| predict_scores(model, x))
        .collect::<Result<_, _>>()?;
    ScoreMatrix::new(model.topics.clone(), rows)
}

/// Mean wall-clock time of `count` single-row predictions, cycling over
/// `features`.
pub fn time_predictions(model: &OvrModel, features: &[SparseVector], count: usize) -> Result<f64, EvalError> {
    if features.is_empty() || count == 0 {
        return Ok(0.0);
    }
    let start = Instant::now();
    for x in features.iter().cycle().take(count) {
        std::hint::black_box(predict_scores(model, x)?);
    }
    Ok(start.elapsed().as_secs_f64() * 1e6 / count as f64)
}

/// Scores the feature rows, computes every configured metric and times
/// single-row predictions.
pub fn evaluate(
    model: &OvrModel,
    features: &[SparseVector],
    truth: &LabelMatrix,
    coverage_frequencies: &[u64],
    cfg: &EvalConfig,
) -> Result<(MetricsReport, Timings), EvalError> {
    if features.is_empty() {
        return Err(EvalError::Empty("empty test split".into()));
    }
    let scores = score_rows(model, features)?;
    let report = report_from_scores(&scores, truth, coverage_frequencies, cfg)?;
    let timings = Timings {
        train_seconds: 0.0,
        mean_prediction_micros: time_predictions(model, features, cfg.timed_predictions)?,
        timed_predictions: cfg.timed_predictions,
    };
    Ok((report, timings))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub median: f64,
}

impl SummaryStats {
    pub fn of(values: &[usize]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_unstable();
        let mid = v.len() / 2;
        let median = if v.len() % 2 == 1 {
            v[mid] as f64
        } else {
            (v[mid - 1] + v[mid]) as f64 / 2.0
        };
        Some(SummaryStats {
            min: v[0],
            max: v[v.len() - 1],
            mean: v.iter().sum::<usize>() as f64 / v.len() as f64,
            median,
        })
    }
}

/// Token-count statistics per source and over all tokens. Empty token lists
/// are left out; a source that is empty everywhere has no statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub per_source: Vec<(Source, Option<SummaryStats>)>,
    pub all: Option<SummaryStats>,
}

pub fn corpus_stats(docs: &[ProcessedDoc]) -> Result<CorpusStats, EvalError> {
    if docs.is_empty() {
        return Err(EvalError::Empty("no documents".into()));
    }
    let lengths =
        |f: &dyn Fn(&ProcessedDoc) -> usize| -> Vec<usize> { docs.iter().map(f).filter(|&l| l > 0).collect() };
    let per_source = Source::ALL
        .iter()
        .map(|&s| (s, SummaryStats::of(&lengths(&|d| d.source(s).len()))))
        .collect();
    Ok(CorpusStats {
        n_docs: docs.len(),
        per_source,
        all: SummaryStats::of(&lengths(&|d| d.all_tokens.len())),
    })
}

/// One evaluated configuration of an ablation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub sources: String,
    pub n_topics: usize,
    pub feature_mode: String,
    pub mapping: String,
    pub classifier: String,
    pub report: MetricsReport,
}

/// CSV with a header and one configuration per line. Metric columns follow
/// the n values of the first row's report.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let ns: Vec<usize> = rows
        .first()
        .map_or_else(Vec::new, |r| r.report.at_n.iter().map(|a| a.n).collect());
    let mut out = String::from("label,sources,n_topics,feature_mode,mapping,classifier,lrap");
    for n in &ns {
        let _ = write!(out, ",p@{n},r@{n},f1@{n},s@{n}");
    }
    out.push('\n');
    let quote = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{:.6}",
            quote(&r.label),
            quote(&r.sources),
            r.n_topics,
            r.feature_mode,
            r.mapping,
            r.classifier,
            r.report.lrap
        );
        for n in &ns {
            match r.report.at(*n) {
                Some(a) => {
                    let _ = write!(out, ",{:.6},{:.6},{:.6},{:.6}", a.precision, a.recall, a.f1, a.success);
                }
                None => out.push_str(",,,,"),
            }
        }
        out.push('\n');
    }
    out
}
