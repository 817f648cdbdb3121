#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;

use topicrec_cli::bundle::{bundle, ModelBundle};
use topicrec_cli::service::{router, AppState};
use topicrec_core::classify::TrainConfig;
use topicrec_core::pipeline::{prepare, train, ExperimentConfig, PrepareConfig, PreparedDataset};
use topicrec_core::synth::{generate, SynthConfig};
use topicrec_core::textprep::{TextTables, TokenFilterConfig};
use topicrec_core::topicnorm::SupportFilter;

pub fn small_dataset(seed: u64) -> PreparedDataset {
    let corpus = generate(&SynthConfig {
        n_repos: 200,
        n_topics: 6,
        seed,
        ..SynthConfig::default()
    });
    prepare(
        &corpus.records,
        &corpus.vocab,
        &TextTables::builtin(),
        &PrepareConfig {
            seed,
            ..Default::default()
        },
    )
    .unwrap()
}

pub fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        support: SupportFilter::MinSupport(1),
        token_filter: TokenFilterConfig {
            min_text_freq: 2,
            min_name_freq: 1,
            ..Default::default()
        },
        train: TrainConfig {
            max_iters: 100,
            ..Default::default()
        },
        ..Default::default()
    }
}

pub fn trained() -> (PreparedDataset, ModelBundle) {
    let ds = small_dataset(42);
    let cfg = small_config();
    let (model, _) = train(&ds, &cfg).unwrap();
    (ds, bundle(model, &cfg, 42))
}

/// Serves `state` on an ephemeral port from a background runtime.
pub fn spawn_service(state: AppState) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, router(state)).await.unwrap();
        });
    });
    format!("http://{addr}")
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

pub fn post(url: &str, body: &str) -> (u16, String) {
    let mut resp = agent()
        .post(url)
        .header("Content-Type", "application/json")
        .send(body)
        .unwrap();
    (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
}

pub fn get(url: &str) -> (u16, String) {
    let mut resp = agent().get(url).call().unwrap();
    (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
}

/// Minimal HTTP server answering canned responses keyed by request path.
pub fn mock_upstream(routes: Vec<(&'static str, u16, &'static str)>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            if reader.read_line(&mut request_line).is_err() {
                continue;
            }
            let mut line = String::new();
            while reader.read_line(&mut line).is_ok() && line != "\r\n" && !line.is_empty() {
                line.clear();
            }
            let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
            let (status, body) = routes
                .iter()
                .find(|(p, _, _)| *p == path)
                .map_or((404, "{}"), |(_, s, b)| (*s, *b));
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    format!("http://{addr}")
}
