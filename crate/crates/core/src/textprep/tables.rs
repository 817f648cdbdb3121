//! Editable preprocessing tables shipped as plain-text data files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::lemma;

pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const ABBREVIATIONS_FILE: &str = "abbreviations.tsv";
pub const BLOCKLIST_FILE: &str = "filename_blocklist.txt";
pub const LEMMA_EXCEPTIONS_FILE: &str = "lemma_exceptions.tsv";

const BUILTIN_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const BUILTIN_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.tsv");
const BUILTIN_BLOCKLIST: &str = include_str!("../../data/filename_blocklist.txt");
const BUILTIN_LEMMA_EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.tsv");

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{file}:{line}: {reason}")]
    Parse { file: String, line: usize, reason: String },
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn is_lower_word(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase())
}

fn parse_set(file: &str, text: &str) -> Result<BTreeSet<String>, TableError> {
    let mut set = BTreeSet::new();
    for (line, raw) in data_lines(text) {
        let word = raw.trim();
        if !is_lower_word(word) {
            return Err(TableError::Parse {
                file: file.into(),
                line,
                reason: format!("`{word}` is not a lowercase ASCII word"),
            });
        }
        set.insert(word.to_string());
    }
    Ok(set)
}

fn parse_pairs(file: &str, text: &str) -> Result<Vec<(usize, String, String)>, TableError> {
    let mut pairs = Vec::new();
    for (line, raw) in data_lines(text) {
        let (key, value) = raw.split_once('\t').ok_or_else(|| TableError::Parse {
            file: file.into(),
            line,
            reason: "expected `key<TAB>value`".into(),
        })?;
        pairs.push((line, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Abbreviation → expansion tokens. Keys and expansion tokens are lowercase
/// ASCII words and no key expands to itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbbreviationTable {
    entries: BTreeMap<String, Vec<String>>,
}

impl AbbreviationTable {
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let file = ABBREVIATIONS_FILE;
        let mut entries = BTreeMap::new();
        for (line, key, value) in parse_pairs(file, text)? {
            let expansion: Vec<String> = value.split_whitespace().map(str::to_string).collect();
            let err = |reason: String| TableError::Parse {
                file: file.into(),
                line,
                reason,
            };
            if !is_lower_word(&key) || expansion.is_empty() || !expansion.iter().all(|w| is_lower_word(w)) {
                return Err(err(format!("`{key}` / `{value}` must be lowercase ASCII words")));
            }
            if expansion.len() == 1 && expansion[0] == key {
                return Err(err(format!("`{key}` maps to itself")));
            }
            if entries.insert(key.clone(), expansion).is_some() {
                return Err(err(format!("duplicate abbreviation `{key}`")));
            }
        }
        Ok(AbbreviationTable { entries })
    }

    pub fn get(&self, token: &str) -> Option<&[String]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}\t{}\n", v.join(" ")))
            .collect()
    }
}

/// All preprocessing tables, as shipped in `data/` or loaded from a bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextTables {
    pub stopwords: BTreeSet<String>,
    pub abbreviations: AbbreviationTable,
    pub filename_blocklist: BTreeSet<String>,
    pub lemma_exceptions: BTreeMap<String, String>,
}

impl TextTables {
    pub fn builtin() -> Self {
        Self::parse(
            BUILTIN_STOPWORDS,
            BUILTIN_ABBREVIATIONS,
            BUILTIN_BLOCKLIST,
            BUILTIN_LEMMA_EXCEPTIONS,
        )
        .expect("built-in tables are valid")
    }

    /// Tables with nothing in them: no stopwords, expansions, blocklist or
    /// lemma exceptions.
    pub fn empty() -> Self {
        TextTables {
            stopwords: BTreeSet::new(),
            abbreviations: AbbreviationTable::default(),
            filename_blocklist: BTreeSet::new(),
            lemma_exceptions: BTreeMap::new(),
        }
    }

    pub fn parse(
        stopwords: &str,
        abbreviations: &str,
        blocklist: &str,
        lemma_exceptions: &str,
    ) -> Result<Self, TableError> {
        let mut exceptions = BTreeMap::new();
        for (line, key, value) in parse_pairs(LEMMA_EXCEPTIONS_FILE, lemma_exceptions)? {
            if !is_lower_word(&key) || !is_lower_word(&value) {
                return Err(TableError::Parse {
                    file: LEMMA_EXCEPTIONS_FILE.into(),
                    line,
                    reason: format!("`{key}` / `{value}` must be lowercase ASCII words"),
                });
            }
            exceptions.insert(key, value);
        }
        // Exception lemmas must themselves be stable, otherwise lemmatizing
        // twice would rewrite them again.
        let targets: Vec<String> = exceptions.values().cloned().collect();
        for lemma in targets {
            if !exceptions.contains_key(&lemma) && !lemma::is_rule_fixed_point(&lemma) {
                exceptions.insert(lemma.clone(), lemma);
            }
        }
        Ok(TextTables {
            stopwords: parse_set(STOPWORDS_FILE, stopwords)?,
            abbreviations: AbbreviationTable::parse(abbreviations)?,
            filename_blocklist: parse_set(BLOCKLIST_FILE, blocklist)?,
            lemma_exceptions: exceptions,
        })
    }

    pub fn load_dir(dir: &Path) -> Result<Self, TableError> {
        let read = |name: &str| {
            fs::read_to_string(dir.join(name)).map_err(|source| TableError::Io {
                file: dir.join(name).display().to_string(),
                source,
            })
        };
        Self::parse(
            &read(STOPWORDS_FILE)?,
            &read(ABBREVIATIONS_FILE)?,
            &read(BLOCKLIST_FILE)?,
            &read(LEMMA_EXCEPTIONS_FILE)?,
        )
    }

    /// File name and contents for each table, in the on-disk format.
    pub fn to_files(&self) -> Vec<(&'static str, String)> {
        let lines = |set: &BTreeSet<String>| set.iter().map(|w| format!("{w}\n")).collect::<String>();
        vec![
            (STOPWORDS_FILE, lines(&self.stopwords)),
            (ABBREVIATIONS_FILE, self.abbreviations.to_tsv()),
            (BLOCKLIST_FILE, lines(&self.filename_blocklist)),
            (
                LEMMA_EXCEPTIONS_FILE,
                self.lemma_exceptions
                    .iter()
                    .map(|(k, v)| format!("{k}\t{v}\n"))
                    .collect(),
            ),
        ]
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), TableError> {
        fs::create_dir_all(dir).map_err(|source| TableError::Io {
            file: dir.display().to_string(),
            source,
        })?;
        for (name, contents) in self.to_files() {
            fs::write(dir.join(name), contents).map_err(|source| TableError::Io {
                file: dir.join(name).display().to_string(),
                source,
            })?;
        }
        Ok(())
    }

    pub fn lemmatize(&self, token: &str) -> String {
        lemma::lemmatize_with(token, &self.lemma_exceptions)
    }

    pub fn singularize(&self, token: &str) -> String {
        lemma::singularize_with(token, &self.lemma_exceptions)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tables_load() {
        let t = TextTables::builtin();
        assert!(t.is_stopword("the"));
        assert_eq!(t.abbreviations.get("db").unwrap(), ["database"]);
        for key in ["lib", "app", "config", "db", "doc", "env"] {
            assert!(t.abbreviations.get(key).is_some(), "{key}");
        }
        for key in ["license", "readme", "body", "run", "new", "gitignore", "txt"] {
            assert!(t.filename_blocklist.contains(key), "{key}");
        }
    }

    #[test]
    fn files_round_trip() {
        let t = TextTables::builtin();
        let files: BTreeMap<_, _> = t.to_files().into_iter().collect();
        let back = TextTables::parse(
            &files[STOPWORDS_FILE],
            &files[ABBREVIATIONS_FILE],
            &files[BLOCKLIST_FILE],
            &files[LEMMA_EXCEPTIONS_FILE],
        )
        .unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(AbbreviationTable::parse("db\tdb\n").is_err());
        assert!(AbbreviationTable::parse("DB\tdatabase\n").is_err());
        assert!(AbbreviationTable::parse("db database\n").is_err());
        assert!(AbbreviationTable::parse("db\tdatabase\ndb\tdata\n").is_err());
        match TextTables::parse("ok\nNot Ok\n", "", "", "") {
            Err(TableError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
