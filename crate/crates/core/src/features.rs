//! TF-IDF n-gram vectorization.
//!
//! Weights are raw term counts times the smoothed inverse document frequency
//! `ln((1 + n_docs) / (1 + df)) + 1`, and every row is L2-normalized.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::{ProcessedDoc, Source, SourceSet};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit TF-IDF on an empty corpus")]
    EmptyCorpus,
    #[error("invalid n-gram range ({min}, {max})")]
    BadNgramRange { min: usize, max: usize },
    #[error("max_features must be at least 1")]
    ZeroFeatures,
    #[error("no sources selected")]
    NoSources,
}

/// Sparse row with strictly increasing column indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        SparseVector { indices, values }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    /// Largest column index + 1, or 0 for the empty vector.
    pub fn min_width(&self) -> usize {
        self.indices.last().map_or(0, |&i| i + 1)
    }

    pub fn to_dense(&self, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    fn normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            for v in &mut self.values {
                *v /= norm;
            }
        }
        self
    }

    fn offset(mut self, by: usize) -> Self {
        for i in &mut self.indices {
            *i += by;
        }
        self
    }

    fn concat(mut self, other: SparseVector) -> Self {
        self.indices.extend(other.indices);
        self.values.extend(other.values);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TfidfConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub max_features: usize,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            ngram_min: 1,
            ngram_max: 2,
            max_features: 20_000,
        }
    }
}

impl TfidfConfig {
    pub fn unigrams(max_features: usize) -> Self {
        TfidfConfig {
            ngram_min: 1,
            ngram_max: 1,
            max_features,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.ngram_min == 0 || self.ngram_max < self.ngram_min {
            return Err(FeatureError::BadNgramRange {
                min: self.ngram_min,
                max: self.ngram_max,
            });
        }
        if self.max_features == 0 {
            return Err(FeatureError::ZeroFeatures);
        }
        Ok(())
    }
}

/// N-grams of `tokens` for every length in `min..=max`, joined by a space.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], min: usize, max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in min..=max {
        if n == 0 || n > tokens.len() {
            continue;
        }
        for w in tokens.windows(n) {
            let mut term = String::from(w[0].as_ref());
            for t in &w[1..] {
                term.push(' ');
                term.push_str(t.as_ref());
            }
            out.push(term);
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TfidfData {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    idf: Vec<f64>,
    n_docs: u64,
    config: TfidfConfig,
}

/// Fitted term → column mapping with document frequencies and idf weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TfidfData", try_from = "TfidfData")]
pub struct TfidfVocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    idf: Vec<f64>,
    n_docs: u64,
    config: TfidfConfig,
    index: HashMap<String, usize>,
}

impl From<TfidfVocabulary> for TfidfData {
    fn from(v: TfidfVocabulary) -> Self {
        TfidfData {
            terms: v.terms,
            doc_freq: v.doc_freq,
            idf: v.idf,
            n_docs: v.n_docs,
            config: v.config,
        }
    }
}

impl TryFrom<TfidfData> for TfidfVocabulary {
    type Error = String;

    fn try_from(d: TfidfData) -> Result<Self, Self::Error> {
        if d.terms.len() != d.idf.len() || d.terms.len() != d.doc_freq.len() {
            return Err("terms, doc_freq and idf lengths differ".into());
        }
        if d.idf.iter().any(|v| !v.is_finite()) {
            return Err("non-finite idf weight".into());
        }
        let index: HashMap<String, usize> = d.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != d.terms.len() {
            return Err("duplicate term".into());
        }
        Ok(TfidfVocabulary {
            terms: d.terms,
            doc_freq: d.doc_freq,
            idf: d.idf,
            n_docs: d.n_docs,
            config: d.config,
            index,
        })
    }
}

pub fn smoothed_idf(n_docs: u64, doc_freq: u64) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

impl TfidfVocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.column(term).map(|i| self.idf[i])
    }

    pub fn idf_weights(&self) -> &[f64] {
        &self.idf
    }

    pub fn doc_freq(&self, term: &str) -> Option<u64> {
        self.column(term).map(|i| self.doc_freq[i])
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn config(&self) -> TfidfConfig {
        self.config
    }

    /// L2-normalized TF-IDF row of `tokens`; terms outside the vocabulary are
    /// ignored.
    pub fn transform<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVector {
        let mut counts: HashMap<usize, u64> = HashMap::new();
        for term in ngrams(tokens, self.config.ngram_min, self.config.ngram_max) {
            if let Some(&col) = self.index.get(&term) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        let mut cols: Vec<(usize, u64)> = counts.into_iter().collect();
        cols.sort_unstable_by_key(|&(c, _)| c);
        let (indices, values) = cols.into_iter().map(|(c, n)| (c, n as f64 * self.idf[c])).unzip();
        SparseVector::new(indices, values).normalized()
    }
}

/// Fits a vocabulary on the training documents, keeping the `max_features`
/// terms with the highest total count (ties broken lexicographically).
/// Columns are assigned in lexicographic term order.
pub fn fit_tfidf<S: AsRef<str>>(docs: &[Vec<S>], cfg: TfidfConfig) -> Result<TfidfVocabulary, FeatureError> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut term_freq: HashMap<String, (u64, u64)> = HashMap::new();
    for doc in docs {
        let grams = ngrams(doc, cfg.ngram_min, cfg.ngram_max);
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for g in &grams {
            let first = seen.insert(g.as_str(), ()).is_none();
            let entry = term_freq.entry(g.clone()).or_insert((0, 0));
            entry.0 += 1;
            if first {
                entry.1 += 1;
            }
        }
    }
    if term_freq.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut ranked: Vec<(String, u64, u64)> = term_freq.into_iter().map(|(t, (tf, df))| (t, tf, df)).collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(cfg.max_features);
    ranked.sort_unstable_by(|a, b| a.0.cmp(&b.0));

    let n_docs = docs.len() as u64;
    let terms: Vec<String> = ranked.iter().map(|r| r.0.clone()).collect();
    let doc_freq: Vec<u64> = ranked.iter().map(|r| r.2).collect();
    let idf = doc_freq.iter().map(|&df| smoothed_idf(n_docs, df)).collect();
    let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(TfidfVocabulary {
        terms,
        doc_freq,
        idf,
        n_docs,
        config: cfg,
        index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    #[default]
    Unified,
    Separate,
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unified" | "single" => Ok(FeatureMode::Unified),
            "separate" => Ok(FeatureMode::Separate),
            other => Err(format!("unknown feature mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpaceConfig {
    pub mode: FeatureMode,
    pub ngram_min: usize,
    pub ngram_max: usize,
    /// Cap for the unified space.
    pub max_features: usize,
    /// Caps for the text and name spaces in separate mode.
    pub text_max_features: usize,
    pub name_max_features: usize,
}

impl Default for FeatureSpaceConfig {
    fn default() -> Self {
        FeatureSpaceConfig {
            mode: FeatureMode::Unified,
            ngram_min: 1,
            ngram_max: 2,
            max_features: 20_000,
            text_max_features: 18_000,
            name_max_features: 2_000,
        }
    }
}

impl FeatureSpaceConfig {
    fn tfidf(&self, max_features: usize) -> TfidfConfig {
        TfidfConfig {
            ngram_min: self.ngram_min,
            ngram_max: self.ngram_max,
            max_features,
        }
    }
}

/// A fitted feature space: one TF-IDF vocabulary over the selected sources,
/// or one for text (description, README, wiki) and one for names (project
/// and file names) whose rows are normalized separately and concatenated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeatureSpace {
    Unified {
        sources: SourceSet,
        vocab: TfidfVocabulary,
    },
    Separate {
        sources: SourceSet,
        text: Option<TfidfVocabulary>,
        names: Option<TfidfVocabulary>,
    },
}

fn group(sources: &SourceSet, names: bool) -> SourceSet {
    SourceSet::new(sources.iter().filter(|s| s.is_name_group() == names))
}

fn fit_group(
    docs: &[ProcessedDoc],
    sources: &SourceSet,
    cfg: TfidfConfig,
) -> Result<Option<TfidfVocabulary>, FeatureError> {
    if sources.is_empty() {
        return Ok(None);
    }
    let token_lists: Vec<Vec<&str>> = docs.iter().map(|d| d.tokens(sources)).collect();
    match fit_tfidf(&token_lists, cfg) {
        Ok(v) => Ok(Some(v)),
        Err(FeatureError::EmptyCorpus) if !docs.is_empty() => Ok(None),
        Err(e) => Err(e),
    }
}

impl FeatureSpace {
    pub fn fit(docs: &[ProcessedDoc], sources: &SourceSet, cfg: &FeatureSpaceConfig) -> Result<Self, FeatureError> {
        if sources.is_empty() {
            return Err(FeatureError::NoSources);
        }
        match cfg.mode {
            FeatureMode::Unified => {
                let token_lists: Vec<Vec<&str>> = docs.iter().map(|d| d.tokens(sources)).collect();
                Ok(FeatureSpace::Unified {
                    sources: sources.clone(),
                    vocab: fit_tfidf(&token_lists, cfg.tfidf(cfg.max_features))?,
                })
            }
            FeatureMode::Separate => {
                if docs.is_empty() {
                    return Err(FeatureError::EmptyCorpus);
                }
                let text = fit_group(docs, &group(sources, false), cfg.tfidf(cfg.text_max_features))?;
                let names = fit_group(docs, &group(sources, true), cfg.tfidf(cfg.name_max_features))?;
                if text.is_none() && names.is_none() {
                    return Err(FeatureError::EmptyCorpus);
                }
                Ok(FeatureSpace::Separate {
                    sources: sources.clone(),
                    text,
                    names,
                })
            }
        }
    }

    pub fn width(&self) -> usize {
        match self {
            FeatureSpace::Unified { vocab, .. } => vocab.len(),
            FeatureSpace::Separate { text, names, .. } => {
                text.as_ref().map_or(0, TfidfVocabulary::len) + names.as_ref().map_or(0, TfidfVocabulary::len)
            }
        }
    }

    pub fn sources(&self) -> &SourceSet {
        match self {
            FeatureSpace::Unified { sources, .. } | FeatureSpace::Separate { sources, .. } => sources,
        }
    }

    pub fn transform(&self, doc: &ProcessedDoc) -> SparseVector {
        match self {
            FeatureSpace::Unified { sources, vocab } => vocab.transform(&doc.tokens(sources)),
            FeatureSpace::Separate { sources, text, names } => {
                let text_width = text.as_ref().map_or(0, TfidfVocabulary::len);
                let text_vec = text
                    .as_ref()
                    .map(|v| v.transform(&doc.tokens(&group(sources, false))))
                    .unwrap_or_default();
                let name_vec = names
                    .as_ref()
                    .map(|v| v.transform(&doc.tokens(&group(sources, true))).offset(text_width))
                    .unwrap_or_default();
                text_vec.concat(name_vec)
            }
        }
    }

    /// Whether `source` contributes to this space.
    pub fn uses(&self, source: Source) -> bool {
        self.sources().contains(source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::assemble_document;
    use proptest::prelude::*;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts
            .iter()
            .map(|t| t.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    // Independent evaluation of the weighting formulas for a single document.
    fn brute_force_row(doc: &[&str], corpus: &[Vec<String>]) -> Vec<(String, f64)> {
        let n = corpus.len() as f64;
        let mut terms: Vec<&str> = doc.to_vec();
        terms.sort();
        terms.dedup();
        let raw: Vec<(String, f64)> = terms
            .iter()
            .map(|t| {
                let tf = doc.iter().filter(|d| *d == t).count() as f64;
                let df = corpus.iter().filter(|d| d.iter().any(|w| w == t)).count() as f64;
                (t.to_string(), tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0))
            })
            .collect();
        let norm = raw.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        raw.into_iter().map(|(t, v)| (t, v / norm)).collect()
    }

    #[test]
    fn golden_idf_and_row() {
        let corpus = docs(&["a b", "a c"]);
        let v = fit_tfidf(&corpus, TfidfConfig::unigrams(100)).unwrap();
        assert_eq!(v.idf("a").unwrap(), 1.0);
        assert!((v.idf("b").unwrap() - (1.5f64.ln() + 1.0)).abs() < 1e-15);
        assert!((v.idf("c").unwrap() - 1.405465).abs() < 1e-6);

        let row = v.transform(&["a", "b"]);
        let oracle = brute_force_row(&["a", "b"], &corpus);
        assert_eq!(row.nnz(), 2);
        for ((col, val), (term, expected)) in row.iter().zip(&oracle) {
            assert_eq!(v.terms()[col], *term);
            assert!((val - expected).abs() < 1e-12);
        }
        assert!((row.values[0] - 0.5798).abs() < 1e-4);
        assert!((row.values[1] - 0.8148).abs() < 1e-4);
    }

    #[test]
    fn cap_and_bigrams() {
        let corpus = docs(&["a b", "a c"]);
        let v = fit_tfidf(&corpus, TfidfConfig::unigrams(1)).unwrap();
        assert_eq!(v.terms(), ["a"]);
        let v = fit_tfidf(&corpus, TfidfConfig::default()).unwrap();
        assert!(v.column("a b").is_some());
        assert!(v.column("b a").is_none());
        assert!(fit_tfidf::<String>(&[], TfidfConfig::default()).is_err());
    }

    #[test]
    fn unknown_terms_give_empty_vector() {
        let v = fit_tfidf(&docs(&["a b"]), TfidfConfig::default()).unwrap();
        let row = v.transform(&["zzz", "yyy"]);
        assert!(row.is_empty());
    }

    #[test]
    fn separate_mode_width() {
        let d = assemble_document(
            vec!["proj".into()],
            vec!["fast".into(), "parser".into()],
            vec!["json".into(), "parser".into()],
            vec![],
            vec!["lexer".into()],
        );
        let docs = vec![d.clone(), d.clone()];
        let cfg = FeatureSpaceConfig {
            mode: FeatureMode::Separate,
            ..Default::default()
        };
        let space = FeatureSpace::fit(&docs, &SourceSet::all(), &cfg).unwrap();
        let FeatureSpace::Separate { text, names, .. } = &space else {
            panic!("expected separate space")
        };
        let (tw, nw) = (text.as_ref().unwrap().len(), names.as_ref().unwrap().len());
        assert_eq!(space.width(), tw + nw);
        assert!(space.width() <= 20_000);
        let row = space.transform(&d);
        // Each half is normalized on its own.
        let (t, n): (Vec<_>, Vec<_>) = row.iter().partition(|(i, _)| *i < tw);
        let norm = |p: &[(usize, f64)]| p.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        assert!((norm(&t) - 1.0).abs() < 1e-12);
        assert!((norm(&n) - 1.0).abs() < 1e-12);
        assert!(n.iter().all(|(i, _)| *i >= tw && *i < tw + nw));
    }

    #[test]
    fn serde_round_trip() {
        let v = fit_tfidf(&docs(&["a b c", "a c d", "e"]), TfidfConfig::default()).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: TfidfVocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }

    proptest! {
        #[test]
        fn rows_are_unit_norm(corpus in proptest::collection::vec(proptest::collection::vec("[a-f]", 0..12), 1..10),
                              probe in proptest::collection::vec("[a-h]", 0..12)) {
            prop_assume!(corpus.iter().any(|d| !d.is_empty()));
            let v = fit_tfidf(&corpus, TfidfConfig::default()).unwrap();
            let row = v.transform(&probe);
            if !row.is_empty() {
                prop_assert!((row.norm() - 1.0).abs() < 1e-9);
                prop_assert!(row.indices.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(row.values.iter().all(|x| *x > 0.0 && x.is_finite()));
            }
            // Order of documents does not matter.
            let mut rev = corpus.clone();
            rev.reverse();
            let v2 = fit_tfidf(&rev, TfidfConfig::default()).unwrap();
            prop_assert_eq!(v2.transform(&probe), row);
        }

        #[test]
        fn idf_decreases_with_df(corpus in proptest::collection::vec(proptest::collection::vec("[a-f]", 1..8), 1..12)) {
            let v = fit_tfidf(&corpus, TfidfConfig::unigrams(100)).unwrap();
            for s in v.terms() {
                for t in v.terms() {
                    if v.doc_freq(s).unwrap() < v.doc_freq(t).unwrap() {
                        prop_assert!(v.idf(s).unwrap() > v.idf(t).unwrap());
                    }
                }
            }
        }
    }
}
