//! Subcommand implementations. Each returns the text to print on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use topicrec_core::corpus::{parse_corpus, write_corpus, RepoRecord};
use topicrec_core::eval::ablation_csv;
use topicrec_core::pipeline::{
    ablation, default_ablation_plan, evaluate_model, prepare, train, AblationSpec, PipelineError,
};
use topicrec_core::synth::{generate, SynthConfig};
use topicrec_core::textprep::TextTables;
use topicrec_core::topicnorm::TopicVocabulary;

use crate::bundle::{bundle, load_model, save_model, BundleError};
use crate::config::{Overrides, RunConfig};
use crate::dataset::{read_dataset, write_dataset, DatasetError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Model(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Model(_) => 3,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => CliError::Usage(e.to_string()),
            PipelineError::Corpus(_) | PipelineError::Topic(_) | PipelineError::Data(_) => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        CliError::Model(e.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

pub fn run_prepare(
    input: &Path,
    topics: &Path,
    out: &Path,
    tables_dir: Option<&Path>,
    overrides: &Overrides,
) -> Result<String, CliError> {
    let cfg = RunConfig::resolve(overrides).map_err(CliError::Usage)?;
    let records = parse_corpus(&read_text(input)?).map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
    let vocab = TopicVocabulary::from_json(&read_text(topics)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", topics.display())))?;
    let tables = match tables_dir {
        Some(dir) => TextTables::load_dir(dir).map_err(|e| CliError::Data(e.to_string()))?,
        None => TextTables::builtin(),
    };
    let ds = prepare(&records, &vocab, &tables, &cfg.prepare_config())?;
    let stats = write_dataset(&ds, out)?;
    Ok(pretty(&stats))
}

pub fn run_train(data: &Path, model_dir: &Path, overrides: &Overrides) -> Result<String, CliError> {
    let cfg = RunConfig::resolve(overrides).map_err(CliError::Usage)?;
    let ds = read_dataset(data)?;
    let (model, seconds) = train(&ds, &cfg.experiment)?;
    let b = bundle(model, &cfg.experiment, cfg.seed);
    let manifest = save_model(&b, model_dir)?;
    Ok(pretty(&json!({
        "manifest": manifest,
        "model_version": b.manifest.model_version,
        "kind": b.manifest.kind,
        "topics": b.model.n_topics(),
        "features": b.model.space.width(),
        "train_seconds": seconds,
    })))
}

pub fn run_evaluate(model_dir: &Path, data: &Path, text: bool, ns: Option<Vec<usize>>) -> Result<String, CliError> {
    let b = load_model(model_dir)?;
    let ds = read_dataset(data)?;
    let mut eval = b.manifest.config.eval.clone();
    if let Some(ns) = ns {
        eval.ns = ns;
        eval.validate().map_err(CliError::Usage)?;
    }
    let (report, timings, _) = evaluate_model(&b.model, &ds, b.manifest.config.mapping, &eval)?;
    log::info!(
        "mean prediction time {:.1} us over {} predictions",
        timings.mean_prediction_micros,
        timings.timed_predictions
    );
    Ok(if text {
        report.to_text()
    } else {
        report.to_json() + "\n"
    })
}

pub fn run_ablate(
    data: &Path,
    plan: Option<&Path>,
    out: Option<&Path>,
    overrides: &Overrides,
) -> Result<String, CliError> {
    let cfg = RunConfig::resolve(overrides).map_err(CliError::Usage)?;
    let plan: Vec<AblationSpec> = match plan {
        Some(p) => {
            serde_json::from_str(&read_text(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => default_ablation_plan(),
    };
    let ds = read_dataset(data)?;
    let rows = ablation(&ds, &cfg.experiment, &plan)?;
    let csv = ablation_csv(&rows);
    match out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

pub enum RepoSource {
    File(PathBuf),
    Remote { full_name: String, api_base: String },
}

fn load_repo(source: &RepoSource) -> Result<RepoRecord, CliError> {
    match source {
        RepoSource::File(path) => {
            let rec: RepoRecord = serde_json::from_str(&read_text(path)?)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            rec.validate().map_err(CliError::Data)?;
            Ok(rec)
        }
        #[cfg(feature = "remote")]
        RepoSource::Remote { full_name, api_base } => {
            let token = std::env::var("GITHUB_TOKEN").ok();
            topicrec_core::remote::RemoteClient::new(api_base.clone(), token)
                .fetch_repo(full_name)
                .map_err(|e| CliError::Data(e.to_string()))
        }
        #[cfg(not(feature = "remote"))]
        RepoSource::Remote { .. } => Err(CliError::Usage("built without remote repository fetching".into())),
    }
}

pub fn run_predict(model_dir: &Path, source: &RepoSource, n: usize, with_scores: bool) -> Result<String, CliError> {
    let b = load_model(model_dir)?;
    let rec = load_repo(source)?;
    let recs = b.model.recommend_record(&rec, n).map_err(|e| match e {
        PipelineError::Classify(c) => CliError::Usage(c.to_string()),
        other => CliError::from(other),
    })?;
    Ok(recs
        .iter()
        .map(|r| match with_scores {
            true => format!("{}\t{:.4}\n", r.topic, r.score),
            false => format!("{}\n", r.topic),
        })
        .collect())
}

/// Writes `corpus.jsonl` and `topics.json` for a synthetic corpus.
pub fn run_synth(out: &Path, cfg: &SynthConfig) -> Result<String, CliError> {
    let corpus = generate(cfg);
    fs::create_dir_all(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    for (name, text) in [
        ("corpus.jsonl", write_corpus(&corpus.records)),
        ("topics.json", corpus.vocab.to_json()),
    ] {
        let path = out.join(name);
        fs::write(&path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(format!(
        "{} repositories, {} topics\n",
        corpus.records.len(),
        corpus.vocab.len()
    ))
}
