//! On-disk model bundles.
//!
//! A bundle directory holds `manifest.json`, `topics.json`, `tfidf.json`,
//! `classifier.json` and a `tables/` directory with the text-cleaning tables.
//! The manifest records a SHA-256 checksum of every other file. Bundles are
//! written into a temporary sibling directory and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use topicrec_core::classify::OvrModel;
use topicrec_core::features::FeatureSpace;
use topicrec_core::pipeline::{ExperimentConfig, TrainedModel};
use topicrec_core::textprep::{KeptTokens, TextPreprocessor, TextTables};
use topicrec_core::topicnorm::TopicVocabulary;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const TOPICS: &str = "topics.json";
pub const TFIDF: &str = "tfidf.json";
pub const CLASSIFIER: &str = "classifier.json";
pub const TABLES_DIR: &str = "tables";
pub const KEPT_TOKENS: &str = "tables/kept_tokens.json";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("missing bundle file `{0}`")]
    Missing(String),
    #[error("checksum mismatch for `{0}`")]
    Checksum(String),
    #[error("unsupported version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("malformed `{file}`: {reason}")]
    Malformed { file: String, reason: String },
    #[error("inconsistent bundle: {0}")]
    Inconsistent(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub kind: String,
    pub created_at: u64,
    pub seed: u64,
    pub model_version: String,
    pub config: ExperimentConfig,
    /// Relative path → hex SHA-256 of every other file in the bundle.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub manifest: Manifest,
    pub model: TrainedModel,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec_pretty(value).expect("bundle parts serialize")
}

/// File contents of a bundle, manifest last.
fn render(model: &TrainedModel, config: &ExperimentConfig, seed: u64) -> (Manifest, Vec<(String, Vec<u8>)>) {
    let mut files: Vec<(String, Vec<u8>)> = vec![
        (TOPICS.into(), model.vocab.to_json().into_bytes()),
        (TFIDF.into(), to_json(&model.space)),
        (CLASSIFIER.into(), to_json(&model.classifier)),
    ];
    for (name, text) in model.preprocessor.tables.to_files() {
        files.push((format!("{TABLES_DIR}/{name}"), text.into_bytes()));
    }
    if let Some(kept) = &model.kept_tokens {
        files.push((KEPT_TOKENS.into(), to_json(kept)));
    }
    let checksums: BTreeMap<String, String> = files.iter().map(|(n, b)| (n.clone(), sha256_hex(b))).collect();
    let fingerprint: String = checksums.iter().map(|(n, c)| format!("{n}:{c}\n")).collect();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        kind: model.classifier.kind().as_str().into(),
        created_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        seed,
        model_version: sha256_hex(fingerprint.as_bytes())[..12].to_string(),
        config: config.clone(),
        files: checksums,
    };
    (manifest, files)
}

/// Builds the bundle for a freshly trained model.
pub fn bundle(model: TrainedModel, config: &ExperimentConfig, seed: u64) -> ModelBundle {
    let (manifest, _) = render(&model, config, seed);
    ModelBundle { manifest, model }
}

fn unique_sibling(dir: &Path, tag: &str) -> PathBuf {
    let name = dir
        .file_name()
        .map_or_else(|| "bundle".into(), |n| n.to_string_lossy().into_owned());
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos());
    dir.with_file_name(format!(".{name}.{tag}-{}-{nanos}", std::process::id()))
}

/// Writes `bundle` to `dir`, replacing any previous bundle there. Returns the
/// manifest path.
pub fn save_model(bundle: &ModelBundle, dir: &Path) -> Result<PathBuf, BundleError> {
    save_model_with(bundle, dir, &mut |path, bytes| fs::write(path, bytes))
}

/// [`save_model`] with a caller-supplied file writer, which lets tests
/// simulate failing disks.
pub fn save_model_with(
    bundle: &ModelBundle,
    dir: &Path,
    write: &mut dyn FnMut(&Path, &[u8]) -> io::Result<()>,
) -> Result<PathBuf, BundleError> {
    let (mut manifest, files) = render(&bundle.model, &bundle.manifest.config, bundle.manifest.seed);
    manifest.created_at = bundle.manifest.created_at;
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let tmp = unique_sibling(dir, "tmp");
    let result = (|| {
        fs::create_dir_all(tmp.join(TABLES_DIR)).map_err(io_err(&tmp))?;
        for (name, bytes) in &files {
            let path = tmp.join(name);
            write(&path, bytes).map_err(io_err(&path))?;
        }
        let path = tmp.join(MANIFEST);
        write(&path, &to_json(&manifest)).map_err(io_err(&path))
    })();
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    if dir.exists() {
        let old = unique_sibling(dir, "old");
        fs::rename(dir, &old).map_err(io_err(dir))?;
        if let Err(source) = fs::rename(&tmp, dir) {
            let _ = fs::rename(&old, dir);
            let _ = fs::remove_dir_all(&tmp);
            return Err(BundleError::Io {
                path: dir.to_path_buf(),
                source,
            });
        }
        let _ = fs::remove_dir_all(&old);
    } else {
        fs::rename(&tmp, dir).map_err(io_err(dir))?;
    }
    Ok(dir.join(MANIFEST))
}

fn read_checked(dir: &Path, manifest: &Manifest, name: &str) -> Result<Vec<u8>, BundleError> {
    let expected = manifest
        .files
        .get(name)
        .ok_or_else(|| BundleError::Missing(name.to_string()))?;
    let path = dir.join(name);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(BundleError::Missing(name.to_string())),
        Err(source) => return Err(BundleError::Io { path, source }),
    };
    if &sha256_hex(&bytes) != expected {
        return Err(BundleError::Checksum(name.to_string()));
    }
    Ok(bytes)
}

fn parse<T: for<'de> Deserialize<'de>>(name: &str, bytes: &[u8]) -> Result<T, BundleError> {
    serde_json::from_slice(bytes).map_err(|e| BundleError::Malformed {
        file: name.to_string(),
        reason: e.to_string(),
    })
}

fn utf8(name: &str, bytes: Vec<u8>) -> Result<String, BundleError> {
    String::from_utf8(bytes).map_err(|e| BundleError::Malformed {
        file: name.to_string(),
        reason: e.to_string(),
    })
}

pub fn load_model(dir: &Path) -> Result<ModelBundle, BundleError> {
    let manifest_path = dir.join(MANIFEST);
    let raw = match fs::read(&manifest_path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(BundleError::Missing(MANIFEST.into())),
        Err(source) => {
            return Err(BundleError::Io {
                path: manifest_path,
                source,
            })
        }
    };
    let version: serde_json::Value = parse(MANIFEST, &raw)?;
    match version.get("format_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => return Err(BundleError::UnsupportedVersion(v as u32)),
        None => {
            return Err(BundleError::Malformed {
                file: MANIFEST.into(),
                reason: "missing format_version".into(),
            })
        }
    }
    let manifest: Manifest = parse(MANIFEST, &raw)?;

    let topics_text = utf8(TOPICS, read_checked(dir, &manifest, TOPICS)?)?;
    let vocab = TopicVocabulary::from_json(&topics_text).map_err(|e| BundleError::Malformed {
        file: TOPICS.into(),
        reason: e.to_string(),
    })?;
    let space: FeatureSpace = parse(TFIDF, &read_checked(dir, &manifest, TFIDF)?)?;
    let classifier: OvrModel = parse(CLASSIFIER, &read_checked(dir, &manifest, CLASSIFIER)?)?;

    let table = |name: &str| -> Result<String, BundleError> {
        let rel = format!("{TABLES_DIR}/{name}");
        utf8(&rel, read_checked(dir, &manifest, &rel)?)
    };
    use topicrec_core::textprep::{ABBREVIATIONS_FILE, BLOCKLIST_FILE, LEMMA_EXCEPTIONS_FILE, STOPWORDS_FILE};
    let tables = TextTables::parse(
        &table(STOPWORDS_FILE)?,
        &table(ABBREVIATIONS_FILE)?,
        &table(BLOCKLIST_FILE)?,
        &table(LEMMA_EXCEPTIONS_FILE)?,
    )
    .map_err(|e| BundleError::Malformed {
        file: TABLES_DIR.into(),
        reason: e.to_string(),
    })?;
    let kept_tokens: Option<KeptTokens> = if manifest.files.contains_key(KEPT_TOKENS) {
        Some(parse(KEPT_TOKENS, &read_checked(dir, &manifest, KEPT_TOKENS)?)?)
    } else {
        None
    };

    let model = TrainedModel {
        vocab,
        preprocessor: TextPreprocessor::new(tables, manifest.config.token_filter.clone()),
        kept_tokens,
        space,
        classifier,
    };
    model.check().map_err(|e| BundleError::Inconsistent(e.to_string()))?;
    Ok(ModelBundle { manifest, model })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
