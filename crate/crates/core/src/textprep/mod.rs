//! Cleaning, tokenization and truncation of a repository's textual sources.

mod lemma;
mod tables;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::RepoRecord;

pub use lemma::{lemmatize_with, singularize_with};
pub use tables::{
    AbbreviationTable, TableError, TextTables, ABBREVIATIONS_FILE, BLOCKLIST_FILE, LEMMA_EXCEPTIONS_FILE,
    STOPWORDS_FILE,
};

pub const NAME_CAP: usize = 10;
pub const DESCRIPTION_CAP: usize = 50;
pub const README_CAP: usize = 400;
pub const WIKI_CAP: usize = 100;
pub const FILENAME_CAP: usize = 100;
pub const TOTAL_CAP: usize = NAME_CAP + DESCRIPTION_CAP + README_CAP + WIKI_CAP + FILENAME_CAP;

/// Tokens shorter than this carry no topical signal once digits and
/// punctuation are gone (`v2.1` leaves a bare `v`).
const MIN_TOKEN_LEN: usize = 2;

/// One textual source of a repository.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Name,
    Description,
    Readme,
    Wiki,
    FileNames,
}

impl Source {
    pub const ALL: [Source; 5] = [
        Source::Name,
        Source::Description,
        Source::Readme,
        Source::Wiki,
        Source::FileNames,
    ];

    pub fn cap(self) -> usize {
        match self {
            Source::Name => NAME_CAP,
            Source::Description => DESCRIPTION_CAP,
            Source::Readme => README_CAP,
            Source::Wiki => WIKI_CAP,
            Source::FileNames => FILENAME_CAP,
        }
    }

    /// Project and file names form the "name" group; everything else is text.
    pub fn is_name_group(self) -> bool {
        matches!(self, Source::Name | Source::FileNames)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Name => "name",
            Source::Description => "description",
            Source::Readme => "readme",
            Source::Wiki => "wiki",
            Source::FileNames => "file_names",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str() == s || (s == "filenames" && *src == Source::FileNames))
            .ok_or_else(|| format!("unknown source `{s}`"))
    }
}

/// A non-empty-or-empty subset of sources, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Source>", into = "Vec<Source>")]
pub struct SourceSet(Vec<Source>);

impl SourceSet {
    pub fn all() -> Self {
        SourceSet(Source::ALL.to_vec())
    }

    pub fn new(sources: impl IntoIterator<Item = Source>) -> Self {
        let mut v: Vec<Source> = sources.into_iter().collect();
        v.sort();
        v.dedup();
        SourceSet(v)
    }

    pub fn contains(&self, s: Source) -> bool {
        self.0.contains(&s)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Source> + '_ {
        self.0.iter().copied()
    }

    pub fn label(&self) -> String {
        if self.0.len() == Source::ALL.len() {
            return "all".to_string();
        }
        self.0.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("+")
    }
}

impl From<Vec<Source>> for SourceSet {
    fn from(v: Vec<Source>) -> Self {
        SourceSet::new(v)
    }
}

impl From<SourceSet> for Vec<Source> {
    fn from(s: SourceSet) -> Self {
        s.0
    }
}

impl FromStr for SourceSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(SourceSet::all());
        }
        let sources = s
            .split([',', '+'])
            .filter(|p| !p.is_empty())
            .map(Source::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SourceSet::new(sources))
    }
}

/// Where corpus-wide token frequencies are counted for [`prune_rare`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountScope {
    #[default]
    TrainOnly,
    Corpus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenFilterConfig {
    pub min_text_freq: u64,
    pub min_name_freq: u64,
    pub count_scope: CountScope,
}

impl Default for TokenFilterConfig {
    fn default() -> Self {
        TokenFilterConfig {
            min_text_freq: 50,
            min_name_freq: 20,
            count_scope: CountScope::TrainOnly,
        }
    }
}

impl TokenFilterConfig {
    /// Thresholds of 1 keep every token.
    pub fn keep_all() -> Self {
        TokenFilterConfig {
            min_text_freq: 1,
            min_name_freq: 1,
            count_scope: CountScope::TrainOnly,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.min_text_freq == 0 || self.min_name_freq == 0 {
            return Err("token frequency thresholds must be >= 1".into());
        }
        Ok(())
    }
}

/// Cleaned, truncated token lists of one repository plus their concatenation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedDoc {
    pub name_tokens: Vec<String>,
    pub description_tokens: Vec<String>,
    pub readme_tokens: Vec<String>,
    pub wiki_tokens: Vec<String>,
    pub filename_tokens: Vec<String>,
    pub all_tokens: Vec<String>,
}

impl ProcessedDoc {
    pub fn source(&self, source: Source) -> &[String] {
        match source {
            Source::Name => &self.name_tokens,
            Source::Description => &self.description_tokens,
            Source::Readme => &self.readme_tokens,
            Source::Wiki => &self.wiki_tokens,
            Source::FileNames => &self.filename_tokens,
        }
    }

    fn source_mut(&mut self, source: Source) -> &mut Vec<String> {
        match source {
            Source::Name => &mut self.name_tokens,
            Source::Description => &mut self.description_tokens,
            Source::Readme => &mut self.readme_tokens,
            Source::Wiki => &mut self.wiki_tokens,
            Source::FileNames => &mut self.filename_tokens,
        }
    }

    /// Concatenation of the selected sources in canonical order.
    pub fn tokens(&self, sources: &SourceSet) -> Vec<&str> {
        sources
            .iter()
            .flat_map(|s| self.source(s).iter().map(String::as_str))
            .collect()
    }

    fn rebuild_all(&mut self) {
        self.all_tokens = Source::ALL
            .iter()
            .flat_map(|&s| self.source(s).iter().cloned())
            .collect();
    }
}

/// Truncates each source to its cap (keeping the earliest tokens) and
/// concatenates them as name, description, README, wiki, file names.
pub fn assemble_document(
    name: Vec<String>,
    description: Vec<String>,
    readme: Vec<String>,
    wiki: Vec<String>,
    filenames: Vec<String>,
) -> ProcessedDoc {
    let mut doc = ProcessedDoc {
        name_tokens: name,
        description_tokens: description,
        readme_tokens: readme,
        wiki_tokens: wiki,
        filename_tokens: filenames,
        all_tokens: Vec::new(),
    };
    for source in Source::ALL {
        doc.source_mut(source).truncate(source.cap());
    }
    doc.rebuild_all();
    doc
}

/// Splits an identifier on `_`, `-`, `.` (and any other non-alphanumeric
/// character) and on lower→upper case boundaries, then lowercases.
pub fn split_identifier(token: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut current = String::new();
    let mut prev_lower = false;
    for c in token.chars() {
        if !c.is_alphanumeric() {
            if !current.is_empty() {
                parts.push(std::mem::take(&mut current));
            }
            prev_lower = false;
            continue;
        }
        if c.is_uppercase() && prev_lower && !current.is_empty() {
            parts.push(std::mem::take(&mut current));
        }
        prev_lower = c.is_lowercase();
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        parts.push(current);
    }
    parts
}

macro_rules! regex {
    ($name:ident, $re:expr) => {
        static $name: LazyLock<Regex> = LazyLock::new(|| Regex::new($re).expect("valid regex"));
    };
}

regex!(FENCED_CODE, r"(?s)```.*?(```|$)|~~~.*?(~~~|$)");
regex!(INLINE_CODE, r"`[^`\n]*`");
regex!(HTML_TAG, r"(?s)<!--.*?-->|</?[A-Za-z][^>]*>");
regex!(MD_IMAGE, r"!\[[^\]]*\]\([^)]*\)");
regex!(MD_LINK, r"\[([^\]]*)\]\([^)]*\)");
regex!(URL, r"(?i)\b(?:https?|ftp|git|ssh)://\S+|\bwww\.\S+");
regex!(EMAIL, r"[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)+");
regex!(USERNAME, r"(?:^|[\s(\[])@[A-Za-z0-9_-]+");
regex!(
    DATE,
    r"\b\d{4}[-/.]\d{1,2}[-/.]\d{1,2}\b|\b\d{1,2}[-/.]\d{1,2}[-/.]\d{2,4}\b|(?i)\b\d{1,2}:\d{2}(?::\d{2})?(?:\s?[ap]m)?\b"
);
regex!(VERSION, r"(?i)\bv?\d+(?:\.\d+)+\b");

/// Strips code, markup, URLs, e-mail addresses, @-mentions, dates, times and
/// version strings, replacing each with a space.
fn strip_abstract_concepts(raw: &str) -> String {
    let mut text = FENCED_CODE.replace_all(raw, " ").into_owned();
    text = INLINE_CODE.replace_all(&text, " ").into_owned();
    text = HTML_TAG.replace_all(&text, " ").into_owned();
    text = MD_IMAGE.replace_all(&text, " ").into_owned();
    text = MD_LINK.replace_all(&text, " $1 ").into_owned();
    text = URL.replace_all(&text, " ").into_owned();
    text = EMAIL.replace_all(&text, " ").into_owned();
    text = USERNAME.replace_all(&text, " ").into_owned();
    text = DATE.replace_all(&text, " ").into_owned();
    VERSION.replace_all(&text, " ").into_owned()
}

/// Keeps ASCII letters and identifier separators; everything else (digits,
/// punctuation, non-ASCII) becomes a space.
fn ascii_letter_words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_ascii_alphabetic() || c == '_' || c == '-' || c == '.'))
        .filter(|w| !w.is_empty())
        .flat_map(split_identifier)
}

fn letters_only(token: &str) -> String {
    token.chars().filter(|c| c.is_ascii_alphabetic()).collect()
}

/// Tokenizer state shared by every source: the tables and thresholds the
/// model was trained with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextPreprocessor {
    pub tables: TextTables,
    pub config: TokenFilterConfig,
}

impl Default for TextPreprocessor {
    fn default() -> Self {
        TextPreprocessor {
            tables: TextTables::builtin(),
            config: TokenFilterConfig::default(),
        }
    }
}

impl TextPreprocessor {
    pub fn new(tables: TextTables, config: TokenFilterConfig) -> Self {
        TextPreprocessor { tables, config }
    }

    fn normalize_once(&self, token: &str, out: &mut Vec<String>) {
        let expanded: Vec<String> = match self.tables.abbreviations.get(token) {
            Some(exp) => exp.to_vec(),
            None => vec![token.to_string()],
        };
        for piece in expanded {
            if self.tables.is_stopword(&piece) {
                continue;
            }
            let lemma = self.tables.lemmatize(&piece);
            if lemma.len() < MIN_TOKEN_LEN || self.tables.is_stopword(&lemma) {
                continue;
            }
            match self.tables.abbreviations.get(&lemma) {
                Some(exp) => out.extend(exp.iter().cloned()),
                None => out.push(lemma),
            }
        }
    }

    /// Abbreviation expansion, stopword removal and lemmatization, repeated
    /// until the token list is stable so that cleaning is idempotent.
    pub fn normalize_tokens(&self, tokens: Vec<String>) -> Vec<String> {
        let mut current = tokens;
        for _ in 0..8 {
            let mut next = Vec::with_capacity(current.len());
            for t in &current {
                self.normalize_once(t, &mut next);
            }
            if next == current {
                break;
            }
            current = next;
        }
        current
    }

    /// Cleans free text (description, README, wiki) into lemmatized tokens.
    pub fn clean_text(&self, raw: &str) -> Vec<String> {
        let stripped = strip_abstract_concepts(raw);
        let tokens: Vec<String> = ascii_letter_words(&stripped).collect();
        self.normalize_tokens(tokens)
    }

    fn clean_name_parts<'a>(&self, parts: impl Iterator<Item = &'a str>, blocklist: bool) -> Vec<String> {
        let mut out = Vec::new();
        for part in parts {
            for piece in split_identifier(part) {
                let piece = letters_only(&piece);
                if piece.is_empty() || self.tables.is_stopword(&piece) {
                    continue;
                }
                if blocklist && self.tables.filename_blocklist.contains(&piece) {
                    continue;
                }
                let lemma = self.tables.lemmatize(&piece);
                if lemma.len() < MIN_TOKEN_LEN || self.tables.is_stopword(&lemma) {
                    continue;
                }
                if blocklist && self.tables.filename_blocklist.contains(&lemma) {
                    continue;
                }
                out.push(lemma);
            }
        }
        out
    }

    /// Tokens of the repository name (the owner is discarded) and of the file
    /// paths. Generic file-name tokens are removed from the latter only.
    pub fn clean_names(&self, full_name: &str, file_paths: &[String]) -> (Vec<String>, Vec<String>) {
        let repo = full_name.split_once('/').map_or(full_name, |(_, name)| name);
        let name_tokens = self.clean_name_parts(std::iter::once(repo), false);
        let filename_tokens = self.clean_name_parts(file_paths.iter().flat_map(|p| p.split(['/', '\\'])), true);
        (name_tokens, filename_tokens)
    }

    /// Cleans and assembles every source of `record`, before rare-token
    /// pruning.
    pub fn process_record(&self, record: &RepoRecord) -> ProcessedDoc {
        let (name, files) = self.clean_names(&record.full_name, &record.file_paths);
        let text = |t: &Option<String>| t.as_deref().map(|s| self.clean_text(s)).unwrap_or_default();
        assemble_document(
            name,
            text(&record.description),
            text(&record.readme),
            text(&record.wiki),
            files,
        )
    }
}

pub fn clean_text(raw: &str, tables: &TextTables) -> Vec<String> {
    TextPreprocessor::new(tables.clone(), TokenFilterConfig::default()).clean_text(raw)
}

pub fn lemmatize(token: &str) -> String {
    static TABLES: LazyLock<TextTables> = LazyLock::new(TextTables::builtin);
    TABLES.lemmatize(token)
}

/// Corpus-wide occurrence counts, kept separately for text sources
/// (name, description, README, wiki) and file names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenCounts {
    pub text: HashMap<String, u64>,
    pub names: HashMap<String, u64>,
}

impl TokenCounts {
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a ProcessedDoc>) -> Self {
        let mut counts = TokenCounts::default();
        for doc in docs {
            for source in Source::ALL {
                let map = if source == Source::FileNames {
                    &mut counts.names
                } else {
                    &mut counts.text
                };
                for t in doc.source(source) {
                    *map.entry(t.clone()).or_insert(0) += 1;
                }
            }
        }
        counts
    }
}

/// Removes tokens whose count in `counts` is below the configured threshold.
pub fn prune_with(docs: &[ProcessedDoc], counts: &TokenCounts, cfg: &TokenFilterConfig) -> Vec<ProcessedDoc> {
    docs.iter()
        .map(|doc| {
            let mut out = doc.clone();
            for source in Source::ALL {
                let (map, min) = if source == Source::FileNames {
                    (&counts.names, cfg.min_name_freq)
                } else {
                    (&counts.text, cfg.min_text_freq)
                };
                out.source_mut(source)
                    .retain(|t| map.get(t).copied().unwrap_or(0) >= min);
            }
            out.rebuild_all();
            out
        })
        .collect()
}

/// Drops rare tokens, counting frequencies over `docs` themselves.
pub fn prune_rare(docs: &[ProcessedDoc], cfg: &TokenFilterConfig) -> Vec<ProcessedDoc> {
    prune_with(docs, &TokenCounts::from_docs(docs), cfg)
}

/// Vocabulary that survived rare-token pruning, kept so that documents seen
/// after training are pruned exactly like the training documents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeptTokens {
    pub text: BTreeSet<String>,
    pub names: BTreeSet<String>,
}

impl KeptTokens {
    pub fn fit(counts: &TokenCounts, cfg: &TokenFilterConfig) -> Self {
        let keep = |map: &HashMap<String, u64>, min: u64| {
            map.iter().filter(|(_, &c)| c >= min).map(|(t, _)| t.clone()).collect()
        };
        KeptTokens {
            text: keep(&counts.text, cfg.min_text_freq),
            names: keep(&counts.names, cfg.min_name_freq),
        }
    }

    pub fn apply(&self, doc: &ProcessedDoc) -> ProcessedDoc {
        let mut out = doc.clone();
        for source in Source::ALL {
            let set = if source == Source::FileNames {
                &self.names
            } else {
                &self.text
            };
            out.source_mut(source).retain(|t| set.contains(t));
        }
        out.rebuild_all();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kept_tokens_match_pruning() {
        let d = |w: &[&str], f: &[&str]| {
            assemble_document(
                vec![],
                w.iter().map(|s| s.to_string()).collect(),
                vec![],
                vec![],
                f.iter().map(|s| s.to_string()).collect(),
            )
        };
        let docs = vec![d(&["aa", "bb", "aa"], &["xx"]), d(&["aa", "cc"], &["xx", "yy"])];
        let cfg = TokenFilterConfig {
            min_text_freq: 2,
            min_name_freq: 2,
            ..Default::default()
        };
        let counts = TokenCounts::from_docs(&docs);
        let kept = KeptTokens::fit(&counts, &cfg);
        let pruned: Vec<ProcessedDoc> = docs.iter().map(|x| kept.apply(x)).collect();
        assert_eq!(pruned, prune_with(&docs, &counts, &cfg));
        assert_eq!(pruned[0].all_tokens, ["aa", "aa", "xx"]);
    }

    fn prep() -> TextPreprocessor {
        TextPreprocessor::default()
    }

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identifier_splitting() {
        assert_eq!(split_identifier("camelCase"), ["camel", "case"]);
        assert_eq!(split_identifier("vscode-java-debug"), ["vscode", "java", "debug"]);
        assert_eq!(split_identifier("x"), ["x"]);
        assert_eq!(split_identifier("snake_case.rs"), ["snake", "case", "rs"]);
        assert_eq!(split_identifier("__"), Vec::<String>::new());
    }

    #[test]
    fn clean_text_examples() {
        let p = prep();
        assert_eq!(
            p.clean_text("Check https://x.io for the lib docs!"),
            ["check", "library", "documentation"]
        );
        assert!(p.clean_text("").is_empty());
        assert!(p.clean_text("   \n\t").is_empty());
        assert_eq!(p.clean_text("DB config v2.1"), ["database", "configuration"]);
    }

    #[test]
    fn removes_abstract_concepts() {
        let p = prep();
        let raw = "Contact me@mail.com or @octocat on 2020-02-01 at 10:30.\n```rust\nfn main() {}\n```\n![logo](img.png) [Docs](http://a.b)";
        assert_eq!(p.clean_text(raw), ["contact", "documentation"]);
        assert_eq!(
            p.clean_text("myHTTPServer parsing-tools"),
            ["httpserver", "parse", "tool"]
        );
    }

    #[test]
    fn names() {
        let p = prep();
        let (name, files) = p.clean_names("fandaL/beso", &[]);
        assert_eq!(name, ["beso"]);
        assert!(files.is_empty());

        let paths = toks(&["README.md", "src/style.css"]);
        let (_, files) = p.clean_names("a/b", &paths);
        assert!(!files.contains(&"readme".to_string()));
        assert!(!files.contains(&"md".to_string()));
        assert!(files.contains(&"style".to_string()));
        assert!(files.contains(&"css".to_string()));

        let open = TextPreprocessor::new(
            TextTables {
                filename_blocklist: Default::default(),
                ..TextTables::builtin()
            },
            TokenFilterConfig::default(),
        );
        let (_, files) = open.clean_names("a/b", &paths);
        assert_eq!(files, ["readme", "md", "src", "style", "css"]);
    }

    #[test]
    fn assembly_truncates() {
        let readme: Vec<String> = (0..500).map(|i| format!("w{i}")).collect();
        let doc = assemble_document(vec![], vec![], readme.clone(), vec![], vec![]);
        assert_eq!(doc.readme_tokens.len(), 400);
        assert_eq!(doc.readme_tokens[..], readme[..400]);
        let empty = assemble_document(vec![], vec![], vec![], vec![], vec![]);
        assert!(empty.all_tokens.is_empty());
    }

    #[test]
    fn pruning_thresholds() {
        let common = vec!["common".to_string(); 50];
        let mut rare = vec!["rare".to_string(); 49];
        rare.extend(common.clone());
        let d1 = assemble_document(vec![], vec![], rare[..99].to_vec(), vec![], vec!["css".to_string(); 20]);
        let cfg = TokenFilterConfig::default();
        let out = prune_rare(std::slice::from_ref(&d1), &cfg);
        assert!(out[0].readme_tokens.iter().all(|t| t == "common"));
        assert_eq!(out[0].filename_tokens.len(), 20);

        let identity = prune_rare(std::slice::from_ref(&d1), &TokenFilterConfig::keep_all());
        assert_eq!(identity[0], d1);
    }

    fn word() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-z]{1,9}",
            "[A-Z][a-z]{1,6}[A-Z][a-z]{1,5}",
            Just("libraries".to_string()),
            Just("DB".to_string()),
            Just("https://example.com/x".to_string()),
            Just("v1.2.3".to_string()),
            Just("testing".to_string()),
            Just("caches".to_string()),
            "[a-z]{2,6}(ing|ed|es|s|ies)",
        ]
    }

    proptest! {
        #[test]
        fn clean_text_is_idempotent(words in proptest::collection::vec(word(), 0..30)) {
            let p = prep();
            let once = p.clean_text(&words.join(" "));
            let twice = p.clean_text(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn clean_text_output_is_lowercase_ascii(text in any::<String>()) {
            for t in prep().clean_text(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(t.bytes().all(|b| b.is_ascii_lowercase()), "{}", t);
            }
        }

        #[test]
        fn assemble_keeps_prefixes(lens in proptest::collection::vec(0usize..600, 5)) {
            let lists: Vec<Vec<String>> = lens.iter().map(|&n| (0..n).map(|i| format!("t{i}")).collect()).collect();
            let doc = assemble_document(lists[0].clone(), lists[1].clone(), lists[2].clone(), lists[3].clone(), lists[4].clone());
            prop_assert!(doc.all_tokens.len() <= TOTAL_CAP);
            for (i, source) in Source::ALL.into_iter().enumerate() {
                let got = doc.source(source);
                prop_assert!(got.len() <= source.cap());
                prop_assert_eq!(got, &lists[i][..got.len()]);
            }
        }

        #[test]
        fn prune_never_grows(docs in proptest::collection::vec(proptest::collection::vec("[a-d]{2}", 0..30), 1..6), min in 1u64..6) {
            let docs: Vec<ProcessedDoc> = docs.into_iter().map(|r| assemble_document(vec![], vec![], r.clone(), vec![], r)).collect();
            let cfg = TokenFilterConfig { min_text_freq: min, min_name_freq: min, ..Default::default() };
            let a = prune_rare(&docs, &cfg);
            prop_assert_eq!(&a, &prune_rare(&docs, &cfg));
            for (before, after) in docs.iter().zip(&a) {
                prop_assert!(after.all_tokens.len() <= before.all_tokens.len());
            }
        }
    }
}
