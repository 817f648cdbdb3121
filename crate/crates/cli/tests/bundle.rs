mod common;

use std::fs;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topicrec_cli::bundle::{load_model, save_model, save_model_with, BundleError, CLASSIFIER, MANIFEST};
use topicrec_core::corpus::RepoRecord;

fn random_record(rng: &mut ChaCha8Rng, words: &[String]) -> RepoRecord {
    let mut pick = |k: usize| -> String {
        (0..k)
            .map(|_| words[rng.random_range(0..words.len())].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut rec = RepoRecord::new("someone/random", 0);
    rec.description = Some(pick(8));
    rec.readme = Some(pick(60));
    rec
}

#[test]
fn round_trip_scores_are_bit_identical() {
    let (ds, b) = common::trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model");
    save_model(&b, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded.manifest.model_version, b.manifest.model_version);

    let words: Vec<String> = ds.docs.iter().flat_map(|d| d.readme_tokens.iter().cloned()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let rec = random_record(&mut rng, &words);
        let before = b.model.scores(&b.model.process_record(&rec)).unwrap();
        let after = loaded.model.scores(&loaded.model.process_record(&rec)).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&before), bits(&after));
    }
}

#[test]
fn rejects_unknown_format_version() {
    let (_, b) = common::trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model");
    save_model(&b, &path).unwrap();
    let manifest = path.join(MANIFEST);
    let text = fs::read_to_string(&manifest)
        .unwrap()
        .replace("\"format_version\": 1", "\"format_version\": 2");
    fs::write(&manifest, text).unwrap();
    let err = load_model(&path).unwrap_err();
    assert!(matches!(err, BundleError::UnsupportedVersion(2)));
    assert!(err.to_string().contains("unsupported version"));
}

#[test]
fn rejects_truncated_classifier() {
    let (_, b) = common::trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model");
    save_model(&b, &path).unwrap();
    let file = path.join(CLASSIFIER);
    let bytes = fs::read(&file).unwrap();
    fs::write(&file, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_model(&path), Err(BundleError::Checksum(_))));

    fs::remove_file(&file).unwrap();
    assert!(matches!(load_model(&path), Err(BundleError::Missing(_))));
}

#[test]
fn failed_write_leaves_previous_bundle_intact() {
    let (_, b) = common::trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model");
    save_model(&b, &path).unwrap();
    let before = fs::read(path.join(CLASSIFIER)).unwrap();

    let mut writes = 0;
    let mut failing = |p: &std::path::Path, bytes: &[u8]| {
        writes += 1;
        if writes == 3 {
            return Err(io::Error::other("disk full"));
        }
        fs::write(p, bytes)
    };
    assert!(matches!(
        save_model_with(&b, &path, &mut failing),
        Err(BundleError::Io { .. })
    ));
    assert_eq!(fs::read(path.join(CLASSIFIER)).unwrap(), before);
    load_model(&path).unwrap();
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(leftovers, ["model"]);
}

#[test]
fn save_replaces_existing_bundle() {
    let (_, b) = common::trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model");
    fs::create_dir_all(&path).unwrap();
    fs::write(path.join("stale.txt"), "old").unwrap();
    save_model(&b, &path).unwrap();
    assert!(!path.join("stale.txt").exists());
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded.manifest.model_version, b.manifest.model_version);
    assert_eq!(loaded.manifest.files, b.manifest.files);
}
