//! Featured-topic recommendation for software repositories.
//!
//! The crate covers the whole offline pipeline: repository ingestion and
//! filtering ([`corpus`]), text cleaning ([`textprep`]), mapping free-form user
//! topics onto a curated vocabulary ([`topicnorm`]), TF-IDF features
//! ([`features`]), one-vs-rest classifiers ([`classify`]) and ranking metrics
//! ([`eval`]). [`pipeline`] ties them together for training and evaluation.

pub mod classify;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod labels;
pub mod pipeline;
#[cfg(feature = "remote")]
pub mod remote;
pub mod synth;
pub mod textprep;
pub mod topicnorm;

pub use classify::{ClassWeights, ClassifierKind, OvrModel, Recommendation, TrainConfig};
pub use corpus::{CorpusSplit, FilterConfig, RepoRecord};
pub use eval::{EvalConfig, MetricsReport, ScoreMatrix, Timings};
pub use features::{FeatureMode, FeatureSpace, FeatureSpaceConfig, SparseVector, TfidfVocabulary};
pub use labels::{LabelMatrix, LabelVector};
pub use pipeline::{ExperimentConfig, PipelineError, PreparedDataset, TrainedModel};
pub use textprep::{KeptTokens, ProcessedDoc, Source, SourceSet, TextPreprocessor, TextTables, TokenFilterConfig};
pub use topicnorm::{MappingMode, SupportFilter, TopicVocabulary};
