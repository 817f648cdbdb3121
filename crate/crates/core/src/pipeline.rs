//! End-to-end data preparation, training, evaluation and prediction.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    predict_scores, recommend, train_ovr, ClassifierKind, ClassifyError, OvrModel, Recommendation, TrainConfig,
    TrainingData,
};
use crate::corpus::{filter_corpus, split_indices, CorpusError, CorpusSplit, FilterConfig, RepoRecord};
use crate::eval::{evaluate, AblationRow, EvalConfig, EvalError, MetricsReport, Timings};
use crate::features::{FeatureError, FeatureMode, FeatureSpace, FeatureSpaceConfig, SparseVector};
use crate::labels::LabelMatrix;
use crate::textprep::{
    CountScope, KeptTokens, ProcessedDoc, SourceSet, TextPreprocessor, TextTables, TokenCounts, TokenFilterConfig,
};
use crate::topicnorm::{
    filter_by_support, MappingMode, SubTopicMap, SupportFilter, TopicError, TopicNormalizer, TopicVocabulary,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepareConfig {
    pub filter: FilterConfig,
    pub seed: u64,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            filter: FilterConfig::default(),
            seed: 42,
        }
    }
}

/// Cleaned documents with both label variants and the train/validation/test
/// partition. Rare-token pruning is not applied yet since it depends on the
/// training split.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub full_names: Vec<String>,
    pub docs: Vec<ProcessedDoc>,
    /// Featured topics per document under exact matching only.
    pub exact_topics: Vec<Vec<String>>,
    /// Featured topics per document with the mapping heuristics applied.
    pub augmented_topics: Vec<Vec<String>>,
    pub split: CorpusSplit,
    pub vocab: TopicVocabulary,
    pub tables: TextTables,
    pub subtopics: SubTopicMap,
    /// Records dropped by the corpus filter and for having no usable text.
    pub dropped_by_filter: usize,
    pub dropped_empty: usize,
}

impl PreparedDataset {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn topics(&self, mode: MappingMode) -> &[Vec<String>] {
        match mode {
            MappingMode::ExactOnly => &self.exact_topics,
            MappingMode::WithHeuristics => &self.augmented_topics,
        }
    }

    /// Label matrix over `vocab`; topics outside it are ignored.
    pub fn labels(&self, mode: MappingMode, vocab: &TopicVocabulary) -> LabelMatrix {
        let rows = self.topics(mode).iter().map(|t| vocab.encode(t)).collect();
        LabelMatrix::new(vocab.len(), rows).expect("encoded rows match vocabulary")
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        let n = self.docs.len();
        if self.full_names.len() != n || self.exact_topics.len() != n || self.augmented_topics.len() != n {
            return Err(PipelineError::Data("dataset columns have different lengths".into()));
        }
        let mut seen = vec![false; n];
        for &i in self
            .split
            .train
            .iter()
            .chain(&self.split.validation)
            .chain(&self.split.test)
        {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(PipelineError::Data(format!(
                    "split index {i} is out of range or repeated"
                )));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(PipelineError::Data("split does not cover every document".into()));
        }
        Ok(())
    }
}

/// Filters the corpus, cleans every record, maps user topics onto the
/// vocabulary and splits the result.
pub fn prepare(
    records: &[RepoRecord],
    vocab: &TopicVocabulary,
    tables: &TextTables,
    cfg: &PrepareConfig,
) -> Result<PreparedDataset, PipelineError> {
    cfg.filter.validate().map_err(PipelineError::Config)?;
    let kept = filter_corpus(records, &cfg.filter);
    let dropped_by_filter = records.len() - kept.len();
    let pre = TextPreprocessor::new(tables.clone(), TokenFilterConfig::default());
    let docs: Vec<ProcessedDoc> = kept.par_iter().map(|r| pre.process_record(r)).collect();

    let normalizer = TopicNormalizer::new(vocab, tables);
    let mut out = PreparedDataset {
        full_names: Vec::new(),
        docs: Vec::new(),
        exact_topics: Vec::new(),
        augmented_topics: Vec::new(),
        split: CorpusSplit {
            train: vec![],
            validation: vec![],
            test: vec![],
            seed: cfg.seed,
        },
        vocab: vocab.clone(),
        tables: tables.clone(),
        subtopics: SubTopicMap::default(),
        dropped_by_filter,
        dropped_empty: 0,
    };
    for (record, doc) in kept.iter().zip(docs) {
        if doc.all_tokens.is_empty() {
            out.dropped_empty += 1;
            continue;
        }
        out.full_names.push(record.full_name.clone());
        out.docs.push(doc);
        let exact = normalizer.map_repo_topics(&record.user_topics, MappingMode::ExactOnly);
        let augmented = normalizer.map_repo_topics(&record.user_topics, MappingMode::WithHeuristics);
        out.exact_topics.push(vocab.decode(&exact));
        out.augmented_topics.push(vocab.decode(&augmented));
        out.subtopics.add(normalizer.sub_topics(&record.user_topics));
    }
    out.split = split_indices(out.docs.len(), cfg.seed)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub sources: SourceSet,
    pub mapping: MappingMode,
    pub support: SupportFilter,
    pub token_filter: TokenFilterConfig,
    pub features: FeatureSpaceConfig,
    pub classifier: ClassifierKind,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sources: SourceSet::all(),
            mapping: MappingMode::WithHeuristics,
            support: SupportFilter::default(),
            token_filter: TokenFilterConfig::default(),
            features: FeatureSpaceConfig::default(),
            classifier: ClassifierKind::Logistic,
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.sources.is_empty() {
            return Err(PipelineError::Config("at least one source must be selected".into()));
        }
        self.token_filter.validate().map_err(PipelineError::Config)?;
        self.train.validate()?;
        self.eval.validate().map_err(PipelineError::Config)?;
        let f = &self.features;
        if f.max_features == 0 || f.text_max_features == 0 || f.name_max_features == 0 {
            return Err(PipelineError::Config("feature caps must be >= 1".into()));
        }
        if f.ngram_min == 0 || f.ngram_max < f.ngram_min {
            return Err(PipelineError::Config("invalid n-gram range".into()));
        }
        if matches!(self.support, SupportFilter::TopK(0)) {
            return Err(PipelineError::Config("top_k must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything needed to turn a repository into topic recommendations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub vocab: TopicVocabulary,
    pub preprocessor: TextPreprocessor,
    pub kept_tokens: Option<KeptTokens>,
    pub space: FeatureSpace,
    pub classifier: OvrModel,
}

impl TrainedModel {
    pub fn check(&self) -> Result<(), PipelineError> {
        self.classifier.validate()?;
        if self.classifier.topics != self.vocab.topics() {
            return Err(PipelineError::Data(
                "classifier topics differ from the topic vocabulary".into(),
            ));
        }
        if self.classifier.width != self.space.width() {
            return Err(PipelineError::Data(format!(
                "classifier width {} differs from feature width {}",
                self.classifier.width,
                self.space.width()
            )));
        }
        Ok(())
    }

    pub fn n_topics(&self) -> usize {
        self.vocab.len()
    }

    pub fn process_record(&self, record: &RepoRecord) -> ProcessedDoc {
        self.preprocessor.process_record(record)
    }

    pub fn features(&self, doc: &ProcessedDoc) -> SparseVector {
        match &self.kept_tokens {
            Some(k) => self.space.transform(&k.apply(doc)),
            None => self.space.transform(doc),
        }
    }

    pub fn scores(&self, doc: &ProcessedDoc) -> Result<Vec<f64>, PipelineError> {
        Ok(predict_scores(&self.classifier, &self.features(doc))?)
    }

    pub fn recommend_doc(&self, doc: &ProcessedDoc, n: usize) -> Result<Vec<Recommendation>, PipelineError> {
        Ok(recommend(&self.scores(doc)?, n, self.vocab.topics())?)
    }

    pub fn recommend_record(&self, record: &RepoRecord, n: usize) -> Result<Vec<Recommendation>, PipelineError> {
        self.recommend_doc(&self.process_record(record), n)
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: TrainedModel,
    pub report: MetricsReport,
    pub timings: Timings,
    pub train_rows: usize,
    pub test_rows: usize,
}

/// Rows of `indices` that carry at least one topic of `labels`.
fn labelled(indices: &[usize], labels: &LabelMatrix) -> Vec<usize> {
    indices.iter().copied().filter(|&i| labels.row(i).count() > 0).collect()
}

/// Trains on the training split only: topic support, token counts (unless
/// configured otherwise), TF-IDF statistics and class weights all come from
/// training rows.
pub fn train(ds: &PreparedDataset, cfg: &ExperimentConfig) -> Result<(TrainedModel, f64), PipelineError> {
    cfg.validate()?;
    ds.check()?;
    let start = Instant::now();
    let full_labels = ds.labels(cfg.mapping, &ds.vocab);
    let train_rows = labelled(&ds.split.train, &full_labels);
    if train_rows.is_empty() {
        return Err(PipelineError::Data(
            "no training repositories carry a featured topic".into(),
        ));
    }
    let vocab = filter_by_support(&full_labels.select_rows(&train_rows), &ds.vocab, cfg.support)?;
    let labels = ds.labels(cfg.mapping, &vocab);
    let train_rows = labelled(&train_rows, &labels);

    let kept_tokens = if cfg.token_filter.min_text_freq <= 1 && cfg.token_filter.min_name_freq <= 1 {
        None
    } else {
        let counts = match cfg.token_filter.count_scope {
            CountScope::TrainOnly => TokenCounts::from_docs(train_rows.iter().map(|&i| &ds.docs[i])),
            CountScope::Corpus => TokenCounts::from_docs(&ds.docs),
        };
        Some(KeptTokens::fit(&counts, &cfg.token_filter))
    };
    let prune = |i: usize| match &kept_tokens {
        Some(k) => k.apply(&ds.docs[i]),
        None => ds.docs[i].clone(),
    };
    let train_docs: Vec<ProcessedDoc> = train_rows.iter().map(|&i| prune(i)).collect();
    let space = FeatureSpace::fit(&train_docs, &cfg.sources, &cfg.features)?;
    let features: Vec<SparseVector> = train_docs.par_iter().map(|d| space.transform(d)).collect();
    let train_labels = labels.select_rows(&train_rows);
    let data = TrainingData {
        features: &features,
        width: space.width(),
        labels: &train_labels,
        topics: vocab.topics(),
    };
    let mut train_cfg = cfg.train;
    train_cfg.use_class_weights = Some(cfg.train.class_weights_for(cfg.classifier));
    let classifier = train_ovr(cfg.classifier, data, &train_cfg)?;
    let model = TrainedModel {
        vocab,
        preprocessor: TextPreprocessor::new(ds.tables.clone(), cfg.token_filter.clone()),
        kept_tokens,
        space,
        classifier,
    };
    Ok((model, start.elapsed().as_secs_f64()))
}

/// Evaluates `model` on the test split under the given mapping mode.
pub fn evaluate_model(
    model: &TrainedModel,
    ds: &PreparedDataset,
    mapping: MappingMode,
    eval: &EvalConfig,
) -> Result<(MetricsReport, Timings, usize), PipelineError> {
    ds.check()?;
    let labels = ds.labels(mapping, &model.vocab);
    let test_rows = labelled(&ds.split.test, &labels);
    if test_rows.is_empty() {
        return Err(PipelineError::Data(
            "no test repositories carry a featured topic".into(),
        ));
    }
    let features: Vec<SparseVector> = test_rows.par_iter().map(|&i| model.features(&ds.docs[i])).collect();
    let truth = labels.select_rows(&test_rows);
    let coverage_freq = ds.labels(mapping, &ds.vocab).column_frequencies();
    let (report, timings) = evaluate(&model.classifier, &features, &truth, &coverage_freq, eval)?;
    Ok((report, timings, test_rows.len()))
}

pub fn run_experiment(ds: &PreparedDataset, cfg: &ExperimentConfig) -> Result<Experiment, PipelineError> {
    let (model, train_seconds) = train(ds, cfg)?;
    let train_rows = model_train_rows(ds, &model, cfg.mapping);
    let (report, mut timings, test_rows) = evaluate_model(&model, ds, cfg.mapping, &cfg.eval)?;
    timings.train_seconds = train_seconds;
    Ok(Experiment {
        model,
        report,
        timings,
        train_rows,
        test_rows,
    })
}

fn model_train_rows(ds: &PreparedDataset, model: &TrainedModel, mapping: MappingMode) -> usize {
    labelled(&ds.split.train, &ds.labels(mapping, &model.vocab)).len()
}

/// One configuration of an ablation plan; unset fields inherit the base
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub label: String,
    #[serde(default)]
    pub sources: Option<SourceSet>,
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub feature_mode: Option<FeatureMode>,
    #[serde(default)]
    pub mapping: Option<MappingMode>,
    #[serde(default)]
    pub classifier: Option<ClassifierKind>,
}

impl AblationSpec {
    pub fn named(label: &str) -> Self {
        AblationSpec {
            label: label.into(),
            sources: None,
            top_k: None,
            feature_mode: None,
            mapping: None,
            classifier: None,
        }
    }

    pub fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base.clone();
        if let Some(s) = &self.sources {
            cfg.sources = s.clone();
        }
        if let Some(k) = self.top_k {
            cfg.support = SupportFilter::TopK(k);
        }
        if let Some(m) = self.feature_mode {
            cfg.features.mode = m;
        }
        if let Some(m) = self.mapping {
            cfg.mapping = m;
        }
        if let Some(c) = self.classifier {
            cfg.classifier = c;
        }
        cfg
    }
}

/// Input-type, feature-space and mapping variations over all sources.
pub fn default_ablation_plan() -> Vec<AblationSpec> {
    use crate::textprep::Source;
    let only = |label: &str, sources: &[Source]| AblationSpec {
        sources: Some(SourceSet::new(sources.iter().copied())),
        ..AblationSpec::named(label)
    };
    vec![
        only("description", &[Source::Description]),
        only("readme", &[Source::Readme]),
        only("names", &[Source::Name, Source::FileNames]),
        only(
            "all-but-filenames",
            &[Source::Name, Source::Description, Source::Readme, Source::Wiki],
        ),
        AblationSpec::named("all"),
        AblationSpec {
            feature_mode: Some(FeatureMode::Separate),
            ..AblationSpec::named("all-separate")
        },
        AblationSpec {
            mapping: Some(MappingMode::ExactOnly),
            ..AblationSpec::named("all-exact-mapping")
        },
    ]
}

/// Trains and evaluates every plan row with the base seed.
pub fn ablation(
    ds: &PreparedDataset,
    base: &ExperimentConfig,
    plan: &[AblationSpec],
) -> Result<Vec<AblationRow>, PipelineError> {
    if let Some(bad) = plan
        .iter()
        .find(|s| s.sources.as_ref().is_some_and(SourceSet::is_empty))
    {
        return Err(PipelineError::Config(format!(
            "plan row `{}` selects no sources",
            bad.label
        )));
    }
    plan.iter()
        .map(|spec| {
            let cfg = spec.apply(base);
            let exp = run_experiment(ds, &cfg)?;
            Ok(AblationRow {
                label: spec.label.clone(),
                sources: cfg.sources.label(),
                n_topics: exp.model.n_topics(),
                feature_mode: match cfg.features.mode {
                    FeatureMode::Unified => "unified".into(),
                    FeatureMode::Separate => "separate".into(),
                },
                mapping: match cfg.mapping {
                    MappingMode::ExactOnly => "exact_only".into(),
                    MappingMode::WithHeuristics => "with_heuristics".into(),
                },
                classifier: cfg.classifier.as_str().into(),
                report: exp.report,
            })
        })
        .collect()
}
