//! Repository records: ingestion, filtering and train/validation/test splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: {reason}")]
    InvalidRecord { line: usize, reason: String },
    #[error("invalid repository name `{0}`: expected `owner/name`")]
    BadFullName(String),
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
}

/// One repository's raw textual sources, user topics and star count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoRecord {
    pub full_name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub readme: Option<String>,
    #[serde(default)]
    pub wiki: Option<String>,
    #[serde(default)]
    pub file_paths: Vec<String>,
    #[serde(rename = "topics", default)]
    pub user_topics: Vec<String>,
    pub stars: u64,
}

impl RepoRecord {
    pub fn new(full_name: impl Into<String>, stars: u64) -> Self {
        RepoRecord {
            full_name: full_name.into(),
            description: None,
            readme: None,
            wiki: None,
            file_paths: Vec::new(),
            user_topics: Vec::new(),
            stars,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        validate_full_name(&self.full_name).map_err(|e| e.to_string())?;
        if self.user_topics.iter().any(|t| t.trim().is_empty()) {
            return Err("empty entry in `topics`".to_string());
        }
        Ok(())
    }

    /// Owner and repository segments of `full_name`.
    pub fn owner_and_name(&self) -> (&str, &str) {
        self.full_name.split_once('/').unwrap_or(("", &self.full_name))
    }
}

pub fn validate_full_name(full_name: &str) -> Result<(), CorpusError> {
    let mut parts = full_name.split('/');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(owner), Some(name), None) if !owner.is_empty() && !name.is_empty() => Ok(()),
        _ => Err(CorpusError::BadFullName(full_name.to_string())),
    }
}

// Loose mirror of `RepoRecord` so missing required fields can be reported by
// name instead of through serde's generic message.
#[derive(Deserialize)]
struct RawRecord {
    full_name: Option<String>,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    readme: Option<String>,
    #[serde(default)]
    wiki: Option<String>,
    #[serde(default)]
    file_paths: Option<Vec<String>>,
    #[serde(default)]
    topics: Option<Vec<String>>,
    stars: Option<serde_json::Value>,
}

/// Parses newline-delimited JSON into records, preserving input order.
///
/// Blank lines are skipped. Errors carry the 1-based line number.
pub fn parse_corpus(stream: &str) -> Result<Vec<RepoRecord>, CorpusError> {
    let mut records = Vec::new();
    for (idx, line) in stream.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|source| CorpusError::Json { line: line_no, source })?;
        let full_name = raw.full_name.ok_or(CorpusError::MissingField {
            line: line_no,
            field: "full_name",
        })?;
        let stars = match raw.stars {
            None | Some(serde_json::Value::Null) => {
                return Err(CorpusError::MissingField {
                    line: line_no,
                    field: "stars",
                })
            }
            Some(v) => v.as_u64().ok_or_else(|| CorpusError::InvalidRecord {
                line: line_no,
                reason: format!("`stars` must be a non-negative integer, got {v}"),
            })?,
        };
        let record = RepoRecord {
            full_name,
            description: raw.description,
            readme: raw.readme,
            wiki: raw.wiki,
            file_paths: raw.file_paths.unwrap_or_default(),
            user_topics: raw.topics.unwrap_or_default(),
            stars,
        };
        record
            .validate()
            .map_err(|reason| CorpusError::InvalidRecord { line: line_no, reason })?;
        records.push(record);
    }
    Ok(records)
}

/// Serializes records back to the JSONL ingestion format.
pub fn write_corpus(records: &[RepoRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Share of alphabetic characters that are not ASCII Latin letters.
///
/// Digits, punctuation and whitespace are excluded from both counts; text
/// without any alphabetic character yields 0.
pub fn non_english_ratio(text: &str) -> f64 {
    let (mut letters, mut foreign) = (0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if !c.is_ascii_alphabetic() {
            foreign += 1;
        }
    }
    if letters == 0 {
        0.0
    } else {
        foreign as f64 / letters as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_stars: u64,
    pub require_text: bool,
    pub max_non_english_ratio: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_stars: 10,
            require_text: true,
            max_non_english_ratio: 0.5,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.max_non_english_ratio) {
            return Err(format!(
                "max_non_english_ratio must be in [0,1], got {}",
                self.max_non_english_ratio
            ));
        }
        Ok(())
    }

    pub fn keeps(&self, record: &RepoRecord) -> bool {
        if record.stars < self.min_stars {
            return false;
        }
        let readme = record.readme.as_deref().unwrap_or("");
        let description = record.description.as_deref().unwrap_or("");
        if self.require_text && readme.trim().is_empty() && description.trim().is_empty() {
            return false;
        }
        let mut text = String::with_capacity(readme.len() + description.len() + 1);
        text.push_str(readme);
        text.push(' ');
        text.push_str(description);
        non_english_ratio(&text) <= self.max_non_english_ratio
    }
}

pub fn filter_corpus(records: &[RepoRecord], cfg: &FilterConfig) -> Vec<RepoRecord> {
    records.iter().filter(|r| cfg.keeps(r)).cloned().collect()
}

/// Index partition of a corpus into train, validation and test sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl CorpusSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shuffles `0..n` under `seed`, then carves off 20% for test and 10% of the
/// remainder for validation (both floored); the rest is training data.
pub fn split_indices(n: usize, seed: u64) -> Result<CorpusSplit, CorpusError> {
    if n == 0 {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_test = n * 20 / 100;
    let remainder = n - n_test;
    let n_validation = remainder * 10 / 100;

    let test = order[..n_test].to_vec();
    let validation = order[n_test..n_test + n_validation].to_vec();
    let train = order[n_test + n_validation..].to_vec();
    Ok(CorpusSplit {
        train,
        validation,
        test,
        seed,
    })
}

pub fn split_corpus<T>(records: &[T], seed: u64) -> Result<CorpusSplit, CorpusError> {
    split_indices(records.len(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_git_git() {
        let line = r#"{"full_name":"git/git","stars":30000,"topics":["c","shell"],"description":"Git Source Code Mirror","extra":1}"#;
        let recs = parse_corpus(line).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].full_name, "git/git");
        assert_eq!(recs[0].user_topics, vec!["c", "shell"]);
        assert_eq!(recs[0].stars, 30000);
        assert!(recs[0].readme.is_none());
    }

    #[test]
    fn empty_stream() {
        assert!(parse_corpus("").unwrap().is_empty());
        assert!(parse_corpus("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn reports_line_numbers() {
        let text = "{\"full_name\":\"a/b\",\"stars\":1}\n{\"full_name\":\"a/c\",\"stars\":\"ten\"}\n";
        match parse_corpus(text) {
            Err(CorpusError::InvalidRecord { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_corpus("{\"full_name\":\"a/b\",\"stars\":1}\n\n{oops") {
            Err(CorpusError::Json { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_corpus("{\"stars\":1}") {
            Err(CorpusError::MissingField {
                line: 1,
                field: "full_name",
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_corpus("{\"full_name\":\"a/b\"}") {
            Err(CorpusError::MissingField { field: "stars", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_corpus("{\"full_name\":\"nobody\",\"stars\":1}").is_err());
        assert!(parse_corpus("{\"full_name\":\"a/b/c\",\"stars\":1}").is_err());
        assert!(parse_corpus("{\"full_name\":\"a/b\",\"stars\":1,\"topics\":[\"\"]}").is_err());
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(non_english_ratio("hello world"), 0.0);
        assert_eq!(non_english_ratio("привет"), 1.0);
        assert!((non_english_ratio("abcпр") - 0.4).abs() < 1e-15);
        assert_eq!(non_english_ratio("1234 !!"), 0.0);
    }

    #[test]
    fn filter_examples() {
        let cfg = FilterConfig::default();
        let mut r = RepoRecord::new("a/b", 9);
        r.description = Some("api client".into());
        assert!(filter_corpus(&[r.clone()], &cfg).is_empty());
        r.stars = 10;
        assert_eq!(filter_corpus(&[r.clone()], &cfg).len(), 1);

        let bare = RepoRecord::new("a/c", 100);
        assert!(filter_corpus(&[bare], &cfg).is_empty());

        let mut foreign = RepoRecord::new("a/d", 100);
        foreign.readme = Some("привет мир, это проект".into());
        assert!(filter_corpus(&[foreign], &cfg).is_empty());
    }

    #[test]
    fn split_sizes() {
        let s = split_indices(100, 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (72, 8, 20));
        let s = split_indices(10, 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 0, 2));
        assert_eq!(split_indices(100, 42).unwrap(), split_indices(100, 42).unwrap());
        assert!(matches!(split_indices(0, 1), Err(CorpusError::EmptyCorpus)));
    }

    proptest! {
        #[test]
        fn split_is_partition(n in 1usize..400, seed in any::<u64>()) {
            let s = split_indices(n, seed).unwrap();
            prop_assert_eq!(s.len(), n);
            let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn ratio_in_unit_interval(text in any::<String>()) {
            let r = non_english_ratio(&text);
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn ascii_letters_are_english(text in "[a-zA-Z0-9 ,.!]*") {
            prop_assert_eq!(non_english_ratio(&text), 0.0);
        }

        #[test]
        fn filter_keeps_subsequence(stars in proptest::collection::vec(0u64..30, 0..40)) {
            let recs: Vec<RepoRecord> = stars.iter().enumerate().map(|(i, &s)| {
                let mut r = RepoRecord::new(format!("o/r{i}"), s);
                r.description = Some("text".into());
                r
            }).collect();
            let kept = filter_corpus(&recs, &FilterConfig::default());
            let mut it = recs.iter();
            for k in &kept {
                prop_assert!(it.any(|r| r == k));
            }
        }
    }
}
