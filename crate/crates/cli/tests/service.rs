mod common;

use serde_json::Value;

use topicrec_cli::service::{AppState, LoadedModel, PredictResponse, RemoteSettings};

fn loaded() -> LoadedModel {
    let (_, b) = common::trained();
    b.into()
}

fn error_code(body: &str) -> String {
    let v: Value = serde_json::from_str(body).unwrap();
    v["error"]["code"].as_str().unwrap().to_string()
}

#[test]
fn predict_returns_sorted_recommendations() {
    let base = common::spawn_service(AppState::loaded(loaded(), None));
    let (status, body) = common::post(
        &format!("{base}/api/v1/predict"),
        r#"{"name": "gson", "description": "serialization library", "n": 4}"#,
    );
    assert_eq!(status, 200, "{body}");
    let resp: PredictResponse = serde_json::from_str(&body).unwrap();
    assert_eq!(resp.recommendations.len(), 4);
    assert!(resp.recommendations.windows(2).all(|w| w[0].score >= w[1].score));
    assert_eq!(resp.model_version.len(), 12);

    let (status, body) = common::post(&format!("{base}/api/v1/predict"), r#"{"readme": "text"}"#);
    assert_eq!(status, 200);
    let resp: PredictResponse = serde_json::from_str(&body).unwrap();
    assert_eq!(resp.recommendations.len(), 5);
}

#[test]
fn predict_rejects_bad_requests() {
    let base = common::spawn_service(AppState::loaded(loaded(), None));
    let url = format!("{base}/api/v1/predict");
    for (body, code) in [
        (r#"{}"#, "empty_input"),
        (r#"{"name": "  ", "file_names": [""]}"#, "empty_input"),
        (r#"{"name": "x", "n": 0}"#, "bad_n"),
        (r#"{"name": "x", "n": 7}"#, "bad_n"),
        (r#"{"name": "x", "n": -3}"#, "bad_n"),
        (r#"{"name": "#, "bad_json"),
        (r#"{"title": "x"}"#, "bad_json"),
    ] {
        let (status, text) = common::post(&url, body);
        assert_eq!(status, 400, "{body} -> {text}");
        assert_eq!(error_code(&text), code, "{body}");
    }
}

#[test]
fn answers_503_until_loaded() {
    let state = AppState::new(None);
    let base = common::spawn_service(state.clone());
    let (status, _) = common::get(&format!("{base}/healthz"));
    assert_eq!(status, 503);
    let (status, body) = common::post(&format!("{base}/api/v1/predict"), r#"{"name": "x"}"#);
    assert_eq!(status, 503);
    assert_eq!(error_code(&body), "loading");

    state.set_model(loaded());
    let (status, body) = common::get(&format!("{base}/healthz"));
    assert_eq!(status, 200);
    assert!(body.contains("\"ok\""));
}

#[test]
fn predict_repo_disabled_without_remote() {
    let base = common::spawn_service(AppState::loaded(loaded(), None));
    let (status, body) = common::get(&format!("{base}/api/v1/predict-repo?full_name=google/gson"));
    assert_eq!(status, 501);
    assert_eq!(error_code(&body), "disabled");
}

#[cfg(feature = "remote")]
#[test]
fn predict_repo_maps_upstream_responses() {
    let upstream = common::mock_upstream(vec![
        (
            "/repos/google/gson",
            200,
            r#"{"description":"serialization library","stargazers_count":5,"topics":[],"default_branch":"main"}"#,
        ),
        ("/repos/google/gson/readme", 200, "convert objects"),
        ("/repos/google/gson/git/trees/main?recursive=1", 200, r#"{"tree":[]}"#),
        ("/repos/limited/repo", 403, r#"{"message":"rate limit"}"#),
    ]);
    let remote = RemoteSettings {
        api_base: upstream,
        token: None,
    };
    let base = common::spawn_service(AppState::loaded(loaded(), Some(remote)));
    let url = |q: &str| format!("{base}/api/v1/predict-repo?{q}");

    let (status, body) = common::get(&url("full_name=google/gson&n=3"));
    assert_eq!(status, 200, "{body}");
    let resp: PredictResponse = serde_json::from_str(&body).unwrap();
    assert_eq!(resp.recommendations.len(), 3);

    let (status, body) = common::get(&url("full_name=nobody/nothing"));
    assert_eq!((status, error_code(&body).as_str()), (404, "not_found"));
    let (status, body) = common::get(&url("full_name=limited/repo"));
    assert_eq!((status, error_code(&body).as_str()), (502, "upstream"));
    let (status, _) = common::get(&url("n=3"));
    assert_eq!(status, 400);
}
