use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use topicrec_cli::commands::{self, CliError, RepoSource};
use topicrec_cli::config::Overrides;
use topicrec_cli::service::{self, RemoteSettings};
use topicrec_core::synth::SynthConfig;

const DEFAULT_API_BASE: &str = "https://api.github.com";

#[derive(Parser)]
#[command(
    name = "topicrec",
    version,
    about = "Recommend featured topics for software repositories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter and clean a JSONL corpus, map topics and split it into a dataset directory.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        topics: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory with replacement text tables.
        #[arg(long)]
        tables: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train a classifier on a dataset directory and save a model bundle.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate a model bundle on the test split; prints the report.
    Evaluate {
        #[arg(long)]
        model_dir: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Aligned text instead of JSON.
        #[arg(long)]
        text: bool,
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train and evaluate every row of an ablation plan; prints CSV.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        /// JSON list of plan rows; defaults to the built-in plan.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Recommend topics for one repository.
    Predict {
        #[arg(long)]
        model_dir: PathBuf,
        /// Repository record as JSON.
        #[arg(long, conflicts_with = "repo", required_unless_present = "repo")]
        repo_file: Option<PathBuf>,
        /// owner/name to fetch remotely (uses GITHUB_TOKEN).
        #[arg(long)]
        repo: Option<String>,
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Print `topic<TAB>score` lines.
        #[arg(long)]
        scores: bool,
        #[arg(long, default_value = DEFAULT_API_BASE)]
        api_base: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a synthetic corpus (`corpus.jsonl`, `topics.json`) for trying the pipeline.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        repos: usize,
        #[arg(long, default_value_t = 20)]
        topics: usize,
        /// Prevalence of the rare topic `topic-00`.
        #[arg(long)]
        rare_prevalence: Option<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Serve predictions over HTTP.
    Serve {
        #[arg(long)]
        model_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        /// Disable the predict-repo endpoint.
        #[arg(long)]
        no_remote: bool,
        #[arg(long, default_value = DEFAULT_API_BASE)]
        api_base: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Prepare {
            input,
            topics,
            out,
            tables,
            overrides,
        } => commands::run_prepare(&input, &topics, &out, tables.as_deref(), &overrides),
        Command::Train {
            data,
            model_dir,
            overrides,
        } => commands::run_train(&data, &model_dir, &overrides),
        Command::Evaluate {
            model_dir,
            data,
            text,
            ns,
            ..
        } => commands::run_evaluate(&model_dir, &data, text, ns),
        Command::Ablate {
            data,
            plan,
            out,
            overrides,
        } => commands::run_ablate(&data, plan.as_deref(), out.as_deref(), &overrides),
        Command::Predict {
            model_dir,
            repo_file,
            repo,
            n,
            scores,
            api_base,
            ..
        } => {
            let source = match (repo_file, repo) {
                (Some(path), _) => RepoSource::File(path),
                (None, Some(full_name)) => RepoSource::Remote { full_name, api_base },
                (None, None) => return Err(CliError::Usage("either --repo-file or --repo is required".into())),
            };
            commands::run_predict(&model_dir, &source, n, scores)
        }
        Command::Synth {
            out,
            repos,
            topics,
            rare_prevalence,
            seed,
        } => {
            if repos == 0 || topics == 0 || rare_prevalence.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                return Err(CliError::Usage(
                    "--repos and --topics must be positive, --rare-prevalence in [0, 1]".into(),
                ));
            }
            let cfg = SynthConfig {
                n_repos: repos,
                n_topics: topics,
                rare_prevalence,
                seed,
                ..SynthConfig::default()
            };
            commands::run_synth(&out, &cfg)
        }
        Command::Serve {
            model_dir,
            listen,
            no_remote,
            api_base,
            ..
        } => {
            let remote = (!no_remote && cfg!(feature = "remote")).then(|| RemoteSettings {
                api_base,
                token: std::env::var("GITHUB_TOKEN").ok(),
            });
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Model(e.to_string()))?;
            runtime
                .block_on(service::serve(&listen, model_dir, remote))
                .map_err(|e| CliError::Usage(format!("cannot serve on {listen}: {e}")))?;
            Ok(String::new())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
