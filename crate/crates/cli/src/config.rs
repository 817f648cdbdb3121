//! Run configuration: defaults, overridden by a JSON config file, overridden
//! by command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use topicrec_core::classify::ClassifierKind;
use topicrec_core::corpus::FilterConfig;
use topicrec_core::features::FeatureMode;
use topicrec_core::pipeline::{ExperimentConfig, PrepareConfig};
use topicrec_core::textprep::SourceSet;
use topicrec_core::topicnorm::{MappingMode, SupportFilter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub filter: FilterConfig,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            filter: FilterConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

/// Flag values that override the config file when present.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON run configuration file.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated sources (name, description, readme, wiki, file_names) or `all`.
    #[arg(long)]
    pub sources: Option<SourceSet>,
    #[arg(long)]
    pub min_stars: Option<u64>,
    #[arg(long, conflicts_with = "top_k")]
    pub min_support: Option<u64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub max_features: Option<usize>,
    /// `unified` or `separate`.
    #[arg(long)]
    pub feature_mode: Option<FeatureMode>,
    /// `exact_only` or `with_heuristics`.
    #[arg(long)]
    pub mapping: Option<MappingMode>,
    /// `logistic` or `mnb`.
    #[arg(long)]
    pub kind: Option<ClassifierKind>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub class_weights: Option<bool>,
    #[arg(long)]
    pub min_text_freq: Option<u64>,
    #[arg(long)]
    pub min_name_freq: Option<u64>,
    /// Comma-separated list sizes for the metric table.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    /// Defaults, then the config file named in `o`, then the flags.
    pub fn resolve(o: &Overrides) -> Result<Self, String> {
        let mut cfg = match &o.config {
            Some(path) => Self::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(o);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let e = &mut self.experiment;
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.sources {
            e.sources = v.clone();
        }
        if let Some(v) = o.min_stars {
            self.filter.min_stars = v;
        }
        if let Some(v) = o.min_support {
            e.support = SupportFilter::MinSupport(v);
        }
        if let Some(v) = o.top_k {
            e.support = SupportFilter::TopK(v);
        }
        if let Some(v) = o.max_features {
            e.features.max_features = v;
        }
        if let Some(v) = o.feature_mode {
            e.features.mode = v;
        }
        if let Some(v) = o.mapping {
            e.mapping = v;
        }
        if let Some(v) = o.kind {
            e.classifier = v;
        }
        if let Some(v) = o.learning_rate {
            e.train.learning_rate = v;
        }
        if let Some(v) = o.max_iters {
            e.train.max_iters = v;
        }
        if let Some(v) = o.l2 {
            e.train.l2 = v;
        }
        if let Some(v) = o.tol {
            e.train.tol = v;
        }
        if let Some(v) = o.class_weights {
            e.train.use_class_weights = Some(v);
        }
        if let Some(v) = o.min_text_freq {
            e.token_filter.min_text_freq = v;
        }
        if let Some(v) = o.min_name_freq {
            e.token_filter.min_name_freq = v;
        }
        if let Some(v) = &o.ns {
            e.eval.ns = v.clone();
        }
        e.train.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), String> {
        self.filter.validate()?;
        self.experiment.validate().map_err(|e| e.to_string())
    }

    pub fn prepare_config(&self) -> PrepareConfig {
        PrepareConfig {
            filter: self.filter.clone(),
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file =
            RunConfig::from_json(r#"{"seed": 7, "experiment": {"classifier": "mnb", "train": {"l2": 0.5}}}"#).unwrap();
        assert_eq!(file.seed, 7);
        assert_eq!(file.experiment.train.learning_rate, 0.1);
        let mut cfg = file.clone();
        cfg.apply(&Overrides {
            seed: Some(9),
            kind: Some(ClassifierKind::Logistic),
            ..Default::default()
        });
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.experiment.train.seed, 9);
        assert_eq!(cfg.experiment.classifier, ClassifierKind::Logistic);
        assert_eq!(cfg.experiment.train.l2, 0.5);
        assert_eq!(RunConfig::default().seed, 42);
    }

    #[test]
    fn rejects_invalid_values() {
        assert!(RunConfig::from_json(r#"{"sed": 1}"#).is_err());
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            learning_rate: Some(0.0),
            ..Default::default()
        });
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.filter.max_non_english_ratio = 2.0;
        assert!(cfg.validate().is_err());
    }
}
