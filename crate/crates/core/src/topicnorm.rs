//! The featured-topic vocabulary and the mapping of free-form user topics
//! onto it.
//!
//! Mapping is generate-and-test: each heuristic proposes a candidate string
//! and the candidate is accepted only if it names a featured topic or one of
//! its aliases. Transforms that are unsafe in general (dropping trailing
//! digits, singularizing) therefore never invent topics such as `cs` from
//! `css`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{LabelMatrix, LabelVector};
use crate::textprep::TextTables;

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("malformed vocabulary file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("duplicate topic `{0}`")]
    DuplicateTopic(String),
    #[error("invalid topic name `{0}`: expected lowercase kebab-case")]
    BadTopic(String),
    #[error("invalid alias `{0}`")]
    BadAlias(String),
    #[error("alias `{alias}` is declared more than once or shadows a topic")]
    DuplicateAlias { alias: String },
    #[error("alias `{alias}` points to unknown topic `{topic}`")]
    UnknownAliasTarget { alias: String, topic: String },
    #[error("frequent embedded token `{0}` does not name a topic or alias")]
    UnknownEmbedded(String),
    #[error("support filter left no topics")]
    EmptyVocabulary,
    #[error("coverage undefined: {0}")]
    Coverage(String),
    #[error("label matrix has {got} columns but the vocabulary has {expected} topics")]
    ShapeMismatch { expected: usize, got: usize },
}

static KEBAB: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[a-z0-9]+(?:-[a-z0-9]+)*$").expect("valid regex"));
static VERSION_SUFFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-v\d+(?:\.\d+)*$").expect("valid regex"));

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TopicEntry {
    topic: String,
    #[serde(default)]
    aliases: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyFile {
    topics: Vec<TopicEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    aliases: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    frequent_embedded: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    protected: Vec<String>,
    #[serde(default = "default_min_support")]
    min_support: u64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VocabularyInput {
    Bare(Vec<TopicEntry>),
    Full(VocabularyFile),
}

fn default_min_support() -> u64 {
    100
}

/// Ordered featured topics (index = label column) with their aliases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicVocabulary {
    topics: Vec<String>,
    aliases: BTreeMap<String, String>,
    frequent_embedded: BTreeSet<String>,
    protected: BTreeSet<String>,
    min_support: u64,
    index: HashMap<String, usize>,
}

impl TopicVocabulary {
    pub fn new(
        topics: Vec<String>,
        aliases: BTreeMap<String, String>,
        frequent_embedded: BTreeSet<String>,
        protected: BTreeSet<String>,
        min_support: u64,
    ) -> Result<Self, TopicError> {
        let mut index = HashMap::with_capacity(topics.len());
        for (i, t) in topics.iter().enumerate() {
            if !KEBAB.is_match(t) {
                return Err(TopicError::BadTopic(t.clone()));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(TopicError::DuplicateTopic(t.clone()));
            }
        }
        for (alias, topic) in &aliases {
            if alias.is_empty() || alias.chars().any(|c| c.is_whitespace() || c.is_uppercase()) {
                return Err(TopicError::BadAlias(alias.clone()));
            }
            if index.contains_key(alias) {
                return Err(TopicError::DuplicateAlias { alias: alias.clone() });
            }
            if !index.contains_key(topic) {
                return Err(TopicError::UnknownAliasTarget {
                    alias: alias.clone(),
                    topic: topic.clone(),
                });
            }
        }
        let vocab = TopicVocabulary {
            topics,
            aliases,
            frequent_embedded,
            protected,
            min_support,
            index,
        };
        if let Some(bad) = vocab.frequent_embedded.iter().find(|t| vocab.resolve(t).is_none()) {
            return Err(TopicError::UnknownEmbedded(bad.clone()));
        }
        Ok(vocab)
    }

    /// Plain vocabulary with no aliases or extraction hints.
    pub fn from_topics<S: Into<String>>(topics: impl IntoIterator<Item = S>) -> Result<Self, TopicError> {
        Self::new(
            topics.into_iter().map(Into::into).collect(),
            BTreeMap::new(),
            BTreeSet::new(),
            BTreeSet::new(),
            default_min_support(),
        )
    }

    /// Parses the vocabulary file: either a bare JSON array of
    /// `{"topic", "aliases"}` entries or an object holding that array under
    /// `topics` plus optional `aliases`, `frequent_embedded`, `protected` and
    /// `min_support` keys. Topic order in the file is the label order.
    pub fn from_json(text: &str) -> Result<Self, TopicError> {
        let file = match serde_json::from_str::<VocabularyInput>(text) {
            Ok(VocabularyInput::Bare(topics)) => VocabularyFile {
                topics,
                aliases: BTreeMap::new(),
                frequent_embedded: Vec::new(),
                protected: Vec::new(),
                min_support: default_min_support(),
            },
            Ok(VocabularyInput::Full(f)) => f,
            // Re-parse as the object form to surface a useful message.
            Err(_) => serde_json::from_str::<VocabularyFile>(text)?,
        };
        let mut aliases = BTreeMap::new();
        let mut seen_topics = BTreeSet::new();
        for entry in &file.topics {
            if !seen_topics.insert(entry.topic.clone()) {
                return Err(TopicError::DuplicateTopic(entry.topic.clone()));
            }
            for alias in &entry.aliases {
                let alias = alias.trim().to_lowercase();
                if alias == entry.topic {
                    continue;
                }
                match aliases.insert(alias.clone(), entry.topic.clone()) {
                    Some(prev) if prev != entry.topic => return Err(TopicError::DuplicateAlias { alias }),
                    _ => {}
                }
            }
        }
        for (alias, topic) in file.aliases {
            let alias = alias.trim().to_lowercase();
            if aliases.insert(alias.clone(), topic).is_some() {
                return Err(TopicError::DuplicateAlias { alias });
            }
        }
        Self::new(
            file.topics.into_iter().map(|e| e.topic).collect(),
            aliases,
            file.frequent_embedded.into_iter().collect(),
            file.protected.into_iter().collect(),
            file.min_support,
        )
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TopicError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            TopicError::Malformed(serde_json::Error::io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            )))
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut by_topic: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (alias, topic) in &self.aliases {
            by_topic.entry(topic).or_default().push(alias.clone());
        }
        let file = VocabularyFile {
            topics: self
                .topics
                .iter()
                .map(|t| TopicEntry {
                    topic: t.clone(),
                    aliases: by_topic.remove(t.as_str()).unwrap_or_default(),
                })
                .collect(),
            aliases: BTreeMap::new(),
            frequent_embedded: self.frequent_embedded.iter().cloned().collect(),
            protected: self.protected.iter().cloned().collect(),
            min_support: self.min_support,
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serializes")
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn topic(&self, i: usize) -> &str {
        &self.topics[i]
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn min_support(&self) -> u64 {
        self.min_support
    }

    pub fn index_of(&self, topic: &str) -> Option<usize> {
        self.index.get(topic).copied()
    }

    /// Index of the topic named by `name`, directly or through an alias.
    pub fn resolve(&self, name: &str) -> Option<usize> {
        self.index
            .get(name)
            .or_else(|| self.aliases.get(name).and_then(|t| self.index.get(t)))
            .copied()
    }

    pub fn is_protected(&self, token: &str) -> bool {
        self.protected.contains(token)
    }

    pub fn encode<S: AsRef<str>>(&self, topics: &[S]) -> LabelVector {
        LabelVector::from_indices(self.len(), topics.iter().filter_map(|t| self.index_of(t.as_ref())))
    }

    pub fn decode(&self, labels: &LabelVector) -> Vec<String> {
        labels.indices().map(|i| self.topics[i].clone()).collect()
    }

    /// Same vocabulary restricted to `keep`, in the given order. Aliases and
    /// embedded tokens of dropped topics are dropped with them.
    fn restricted(&self, keep: Vec<String>) -> Result<Self, TopicError> {
        let kept: BTreeSet<&str> = keep.iter().map(String::as_str).collect();
        let aliases = self
            .aliases
            .iter()
            .filter(|(_, t)| kept.contains(t.as_str()))
            .map(|(a, t)| (a.clone(), t.clone()))
            .collect();
        let frequent_embedded = self
            .frequent_embedded
            .iter()
            .filter(|e| self.resolve(e).is_some_and(|i| kept.contains(self.topics[i].as_str())))
            .cloned()
            .collect();
        Self::new(
            keep,
            aliases,
            frequent_embedded,
            self.protected.clone(),
            self.min_support,
        )
    }
}

/// Whether heuristics beyond exact topic/alias matching are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingMode {
    ExactOnly,
    #[default]
    WithHeuristics,
}

impl std::str::FromStr for MappingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact_only" | "exact" => Ok(MappingMode::ExactOnly),
            "with_heuristics" | "heuristics" => Ok(MappingMode::WithHeuristics),
            other => Err(format!("unknown mapping mode `{other}`")),
        }
    }
}

fn strip_trailing_digits(s: &str) -> &str {
    s.trim_end_matches(|c: char| c.is_ascii_digit())
        .trim_end_matches(['-', '.', '_'])
}

/// Applies the topic-mapping heuristics against one vocabulary.
pub struct TopicNormalizer<'a> {
    vocab: &'a TopicVocabulary,
    tables: &'a TextTables,
}

impl<'a> TopicNormalizer<'a> {
    pub fn new(vocab: &'a TopicVocabulary, tables: &'a TextTables) -> Self {
        TopicNormalizer { vocab, tables }
    }

    pub fn vocabulary(&self) -> &TopicVocabulary {
        self.vocab
    }

    /// Digit-stripped and singular variants of `s`, unless `s` is protected.
    fn destructive_variants(&self, s: &str) -> Vec<String> {
        if self.vocab.is_protected(s) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let no_digits = strip_trailing_digits(s);
        if !no_digits.is_empty() && no_digits != s {
            out.push(no_digits.to_string());
        }
        for base in [s, no_digits] {
            if base.is_empty() || self.vocab.is_protected(base) {
                continue;
            }
            let singular = self.singularize_last(base);
            if singular != base {
                out.push(singular);
            }
        }
        out
    }

    fn singularize_last(&self, s: &str) -> String {
        match s.rsplit_once('-') {
            Some((head, last)) => format!("{head}-{}", self.tables.singularize(last)),
            None => self.tables.singularize(s),
        }
    }

    /// Abbreviation expansion and stopword removal of each hyphen-separated
    /// part, without and with lemmatization.
    fn normalized_parts(&self, s: &str) -> (Vec<String>, Vec<String>) {
        let mut expanded = Vec::new();
        let mut out = Vec::new();
        for part in s.split('-').filter(|p| !p.is_empty()) {
            let pieces: Vec<String> = match self.tables.abbreviations.get(part) {
                Some(exp) => exp.to_vec(),
                None => vec![part.to_string()],
            };
            for piece in pieces {
                if self.tables.is_stopword(&piece) {
                    continue;
                }
                expanded.push(piece.clone());
                if piece.bytes().all(|b| b.is_ascii_lowercase()) && !self.vocab.is_protected(&piece) {
                    out.push(self.tables.lemmatize(&piece));
                } else {
                    out.push(piece);
                }
            }
        }
        (expanded, out)
    }

    fn resolve_any<'s>(&self, candidates: impl IntoIterator<Item = &'s str>) -> Option<usize> {
        candidates.into_iter().find_map(|c| self.vocab.resolve(c))
    }

    /// Featured topics (as vocabulary indices) that `user_topic` maps to.
    pub fn normalize_indices(&self, user_topic: &str) -> BTreeSet<usize> {
        let topic = user_topic.trim().to_lowercase().replace([' ', '_'], "-");
        let mut found = BTreeSet::new();
        if topic.is_empty() {
            return found;
        }
        // Exact topic or alias.
        if let Some(i) = self.vocab.resolve(&topic) {
            found.insert(i);
            return found;
        }
        // Version suffix: react-router-v3 -> react-router.
        let base = VERSION_SUFFIX.replace(&topic, "").into_owned();
        if base != topic {
            if let Some(i) = self.vocab.resolve(&base) {
                found.insert(i);
                return found;
            }
        }
        // Trailing digits, then plural forms; kept only when they match.
        let variants = self.destructive_variants(&base);
        if let Some(i) = self.resolve_any(variants.iter().map(String::as_str)) {
            found.insert(i);
            return found;
        }
        // Abbreviations, stopwords and lemmas of the hyphen-separated parts.
        let (expanded, parts) = self.normalized_parts(&base);
        if !parts.is_empty() {
            let candidates = [expanded.join("-"), parts.join("-")];
            if let Some(i) = self.resolve_any(candidates.iter().map(String::as_str)) {
                found.insert(i);
                return found;
            }
        }
        // Embedded topics: contiguous runs of segments that name a topic,
        // plus frequent tokens such as `api` or `tool`.
        let raw: Vec<&str> = base.split('-').filter(|p| !p.is_empty()).collect();
        for start in 0..raw.len() {
            for end in start + 1..=raw.len() {
                let run = raw[start..end].join("-");
                if let Some(i) = self.vocab.resolve(&run) {
                    found.insert(i);
                    continue;
                }
                let variants = self.destructive_variants(&run);
                if let Some(i) = self.resolve_any(variants.iter().map(String::as_str)) {
                    found.insert(i);
                }
            }
        }
        for part in &parts {
            if let Some(i) = self.vocab.resolve(part) {
                found.insert(i);
            }
            if self.vocab.frequent_embedded.contains(part) {
                if let Some(i) = self.vocab.resolve(part) {
                    found.insert(i);
                }
            }
        }
        for token in &self.vocab.frequent_embedded {
            if raw.contains(&token.as_str()) {
                if let Some(i) = self.vocab.resolve(token) {
                    found.insert(i);
                }
            }
        }
        found
    }

    pub fn normalize_topic(&self, user_topic: &str) -> BTreeSet<String> {
        self.normalize_indices(user_topic)
            .into_iter()
            .map(|i| self.vocab.topic(i).to_string())
            .collect()
    }

    /// Joins adjacent user topics that do not match on their own
    /// (`neural`, `network` -> `neural-network`). Pairs are consumed left to
    /// right without overlap.
    pub fn aggregate_adjacent_indices<S: AsRef<str>>(&self, user_topics: &[S]) -> BTreeSet<usize> {
        let topics: Vec<String> = user_topics.iter().map(|t| t.as_ref().trim().to_lowercase()).collect();
        let mut found = BTreeSet::new();
        let mut i = 0;
        while i + 1 < topics.len() {
            let (a, b) = (&topics[i], &topics[i + 1]);
            if self.vocab.resolve(a).is_none() && self.vocab.resolve(b).is_none() {
                let joined = format!("{a}-{b}");
                let lemma_joined = format!("{}-{}", a, self.tables.singularize(b));
                if let Some(t) = self.resolve_any([joined.as_str(), lemma_joined.as_str()]) {
                    found.insert(t);
                    i += 2;
                    continue;
                }
            }
            i += 1;
        }
        found
    }

    pub fn aggregate_adjacent<S: AsRef<str>>(&self, user_topics: &[S]) -> BTreeSet<String> {
        self.aggregate_adjacent_indices(user_topics)
            .into_iter()
            .map(|i| self.vocab.topic(i).to_string())
            .collect()
    }

    pub fn map_repo_topics<S: AsRef<str>>(&self, user_topics: &[S], mode: MappingMode) -> LabelVector {
        let mut labels = LabelVector::zeros(self.vocab.len());
        match mode {
            MappingMode::ExactOnly => {
                for t in user_topics {
                    if let Some(i) = self.vocab.resolve(&t.as_ref().trim().to_lowercase()) {
                        labels.set(i);
                    }
                }
            }
            MappingMode::WithHeuristics => {
                for t in user_topics {
                    for i in self.normalize_indices(t.as_ref()) {
                        labels.set(i);
                    }
                }
                for i in self.aggregate_adjacent_indices(user_topics) {
                    labels.set(i);
                }
            }
        }
        labels
    }

    /// User topics that only map through the heuristics, with their targets.
    pub fn sub_topics<S: AsRef<str>>(&self, user_topics: &[S]) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        for t in user_topics {
            let t = t.as_ref().trim().to_lowercase();
            if self.vocab.resolve(&t).is_some() {
                continue;
            }
            for i in self.normalize_indices(&t) {
                pairs.push((t.clone(), self.vocab.topic(i).to_string()));
            }
        }
        let topics: Vec<String> = user_topics.iter().map(|t| t.as_ref().trim().to_lowercase()).collect();
        let mut i = 0;
        while i + 1 < topics.len() {
            let single: BTreeSet<usize> = self.aggregate_adjacent_indices(&topics[i..i + 2]);
            if let Some(&t) = single.iter().next() {
                pairs.push((
                    format!("{} {}", topics[i], topics[i + 1]),
                    self.vocab.topic(t).to_string(),
                ));
                i += 2;
            } else {
                i += 1;
            }
        }
        pairs
    }
}

/// Collected sub-topic → featured-topic mappings, exported as two-column TSV.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubTopicMap {
    pub entries: BTreeMap<String, BTreeSet<String>>,
}

impl SubTopicMap {
    pub fn add(&mut self, pairs: impl IntoIterator<Item = (String, String)>) {
        for (sub, featured) in pairs {
            self.entries.entry(sub).or_default().insert(featured);
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (sub, featured) in &self.entries {
            for f in featured {
                out.push_str(sub);
                out.push('\t');
                out.push_str(f);
                out.push('\n');
            }
        }
        out
    }
}

pub fn normalize_topic(user_topic: &str, vocab: &TopicVocabulary, tables: &TextTables) -> BTreeSet<String> {
    TopicNormalizer::new(vocab, tables).normalize_topic(user_topic)
}

pub fn aggregate_adjacent<S: AsRef<str>>(
    user_topics: &[S],
    vocab: &TopicVocabulary,
    tables: &TextTables,
) -> BTreeSet<String> {
    TopicNormalizer::new(vocab, tables).aggregate_adjacent(user_topics)
}

pub fn map_repo_topics<S: AsRef<str>>(
    user_topics: &[S],
    vocab: &TopicVocabulary,
    tables: &TextTables,
    mode: MappingMode,
) -> LabelVector {
    TopicNormalizer::new(vocab, tables).map_repo_topics(user_topics, mode)
}

/// How many topics survive [`filter_by_support`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportFilter {
    MinSupport(u64),
    TopK(usize),
}

impl Default for SupportFilter {
    fn default() -> Self {
        SupportFilter::MinSupport(default_min_support())
    }
}

/// Keeps frequently used topics and re-derives the index order as
/// descending corpus frequency, ties broken lexicographically.
pub fn filter_by_support(
    labels: &LabelMatrix,
    vocab: &TopicVocabulary,
    filter: SupportFilter,
) -> Result<TopicVocabulary, TopicError> {
    if labels.n_topics() != vocab.len() {
        return Err(TopicError::ShapeMismatch {
            expected: vocab.len(),
            got: labels.n_topics(),
        });
    }
    let freq = labels.column_frequencies();
    let mut order: Vec<usize> = (0..vocab.len()).collect();
    order.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then_with(|| vocab.topic(a).cmp(vocab.topic(b))));
    let keep: Vec<String> = match filter {
        SupportFilter::MinSupport(min) => order
            .into_iter()
            .filter(|&i| freq[i] >= min.max(1))
            .map(|i| vocab.topic(i).to_string())
            .collect(),
        SupportFilter::TopK(k) => order
            .into_iter()
            .filter(|&i| freq[i] >= 1)
            .take(k)
            .map(|i| vocab.topic(i).to_string())
            .collect(),
    };
    if keep.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    vocab.restricted(keep)
}

/// Re-expresses label rows of `from` over the topics of `to`; topics missing
/// from `to` are dropped.
pub fn remap_labels(labels: &LabelMatrix, from: &TopicVocabulary, to: &TopicVocabulary) -> LabelMatrix {
    let mapping: Vec<Option<usize>> = from.topics().iter().map(|t| to.index_of(t)).collect();
    let rows = labels
        .rows()
        .iter()
        .map(|r| LabelVector::from_indices(to.len(), r.indices().filter_map(|i| mapping[i])))
        .collect();
    LabelMatrix::new(to.len(), rows).expect("rows sized to target vocabulary")
}

/// Share of all topic occurrences covered by the `k` most frequent topics.
/// `frequencies` must be sorted in descending order.
pub fn coverage(frequencies: &[u64], k: usize) -> Result<f64, TopicError> {
    if k > frequencies.len() {
        return Err(TopicError::Coverage(format!(
            "k={k} exceeds the number of topics ({})",
            frequencies.len()
        )));
    }
    if frequencies.windows(2).any(|w| w[0] < w[1]) {
        return Err(TopicError::Coverage("frequencies must be sorted descending".into()));
    }
    let total: u64 = frequencies.iter().sum();
    if total == 0 {
        return Err(TopicError::Coverage("all frequencies are zero".into()));
    }
    let top: u64 = frequencies[..k].iter().sum();
    Ok(top as f64 / total as f64)
}

/// `(k, coverage_k)` for every k from 1 to the number of topics.
pub fn coverage_curve(frequencies: &[u64]) -> Result<Vec<(usize, f64)>, TopicError> {
    let mut sorted = frequencies.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    (1..=sorted.len())
        .map(|k| coverage(&sorted, k).map(|c| (k, c)))
        .collect()
}
