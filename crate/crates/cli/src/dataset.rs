//! Processed dataset directory: `docs.jsonl`, `labels.jsonl`, `splits.json`,
//! `subtopics.tsv`, `stats.json`, plus `topics.json` and `tables/` so the
//! directory is self-contained.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use topicrec_core::corpus::CorpusSplit;
use topicrec_core::eval::{corpus_stats, CorpusStats};
use topicrec_core::pipeline::PreparedDataset;
use topicrec_core::textprep::{ProcessedDoc, TextTables};
use topicrec_core::topicnorm::{SubTopicMap, TopicVocabulary};

pub const DOCS: &str = "docs.jsonl";
pub const LABELS: &str = "labels.jsonl";
pub const SPLITS: &str = "splits.json";
pub const SUBTOPICS: &str = "subtopics.tsv";
pub const STATS: &str = "stats.json";
pub const TOPICS: &str = "topics.json";
pub const TABLES: &str = "tables";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{file}: {reason}")]
    Io { file: String, reason: String },
    #[error("{file}:{line}: {reason}")]
    Parse { file: String, line: usize, reason: String },
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelLine {
    full_name: String,
    exact: Vec<String>,
    augmented: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_docs: usize,
    pub dropped_by_filter: usize,
    pub dropped_empty: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub tokens: CorpusStats,
}

fn io(file: &Path, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Io {
        file: file.display().to_string(),
        reason: e.to_string(),
    }
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|i| serde_json::to_string(&i).expect("serializable") + "\n")
        .collect()
}

pub fn stats(ds: &PreparedDataset) -> Result<DatasetStats, DatasetError> {
    Ok(DatasetStats {
        n_docs: ds.len(),
        dropped_by_filter: ds.dropped_by_filter,
        dropped_empty: ds.dropped_empty,
        train: ds.split.train.len(),
        validation: ds.split.validation.len(),
        test: ds.split.test.len(),
        tokens: corpus_stats(&ds.docs).map_err(|e| DatasetError::Inconsistent(e.to_string()))?,
    })
}

pub fn write_dataset(ds: &PreparedDataset, dir: &Path) -> Result<DatasetStats, DatasetError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let stats = stats(ds)?;
    let labels = (0..ds.len()).map(|i| LabelLine {
        full_name: ds.full_names[i].clone(),
        exact: ds.exact_topics[i].clone(),
        augmented: ds.augmented_topics[i].clone(),
    });
    let files = [
        (DOCS, jsonl(&ds.docs)),
        (LABELS, jsonl(labels)),
        (SPLITS, serde_json::to_string_pretty(&ds.split).expect("serializable")),
        (SUBTOPICS, ds.subtopics.to_tsv()),
        (STATS, serde_json::to_string_pretty(&stats).expect("serializable")),
        (TOPICS, ds.vocab.to_json()),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| io(&path, e))?;
    }
    let tables = dir.join(TABLES);
    ds.tables.write_dir(&tables).map_err(|e| io(&tables, e))?;
    Ok(stats)
}

fn read(dir: &Path, name: &str) -> Result<String, DatasetError> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| io(&path, e))
}

fn parse_lines<T: for<'de> Deserialize<'de>>(file: &str, text: &str) -> Result<Vec<T>, DatasetError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| DatasetError::Parse {
                file: file.into(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

fn parse_subtopics(text: &str) -> Result<SubTopicMap, DatasetError> {
    let mut map = SubTopicMap::default();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let (sub, featured) = line.split_once('\t').ok_or_else(|| DatasetError::Parse {
            file: SUBTOPICS.into(),
            line: i + 1,
            reason: "expected two tab-separated columns".into(),
        })?;
        map.add([(sub.to_string(), featured.to_string())]);
    }
    Ok(map)
}

pub fn read_dataset(dir: &Path) -> Result<PreparedDataset, DatasetError> {
    let docs: Vec<ProcessedDoc> = parse_lines(DOCS, &read(dir, DOCS)?)?;
    let labels: Vec<LabelLine> = parse_lines(LABELS, &read(dir, LABELS)?)?;
    let split: CorpusSplit = serde_json::from_str(&read(dir, SPLITS)?).map_err(|e| DatasetError::Parse {
        file: SPLITS.into(),
        line: e.line(),
        reason: e.to_string(),
    })?;
    let vocab = TopicVocabulary::from_json(&read(dir, TOPICS)?).map_err(|e| io(&dir.join(TOPICS), e))?;
    let tables = TextTables::load_dir(&dir.join(TABLES)).map_err(|e| io(&dir.join(TABLES), e))?;
    let subtopics = parse_subtopics(&read(dir, SUBTOPICS)?)?;
    let stats: DatasetStats = serde_json::from_str(&read(dir, STATS)?).map_err(|e| DatasetError::Parse {
        file: STATS.into(),
        line: e.line(),
        reason: e.to_string(),
    })?;
    if labels.len() != docs.len() {
        return Err(DatasetError::Inconsistent(format!(
            "{} documents but {} label lines",
            docs.len(),
            labels.len()
        )));
    }
    let ds = PreparedDataset {
        full_names: labels.iter().map(|l| l.full_name.clone()).collect(),
        exact_topics: labels.iter().map(|l| l.exact.clone()).collect(),
        augmented_topics: labels.into_iter().map(|l| l.augmented).collect(),
        docs,
        split,
        vocab,
        tables,
        subtopics,
        dropped_by_filter: stats.dropped_by_filter,
        dropped_empty: stats.dropped_empty,
    };
    ds.check().map_err(|e| DatasetError::Inconsistent(e.to_string()))?;
    Ok(ds)
}
