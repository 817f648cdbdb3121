//! Blocking client for the GitHub REST API, used to populate a [`RepoRecord`]
//! for a repository that is not in the local corpus.

use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::{validate_full_name, RepoRecord};

pub const DEFAULT_API_BASE: &str = "https://api.github.com";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("repository `{0}` not found")]
    NotFound(String),
    #[error("upstream rejected the request (status {status}); check GITHUB_TOKEN or rate limits")]
    UpstreamAuth { status: u16 },
    #[error("upstream unavailable: {0}")]
    UpstreamUnavailable(String),
    #[error("invalid repository name `{0}`")]
    BadName(String),
}

#[derive(Deserialize)]
struct RepoResponse {
    description: Option<String>,
    #[serde(default)]
    stargazers_count: u64,
    #[serde(default)]
    topics: Vec<String>,
    default_branch: Option<String>,
}

#[derive(Deserialize)]
struct TreeResponse {
    #[serde(default)]
    tree: Vec<TreeEntry>,
}

#[derive(Deserialize)]
struct TreeEntry {
    path: String,
    #[serde(rename = "type")]
    kind: String,
}

#[derive(Clone)]
pub struct RemoteClient {
    base_url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient")
            .field("base_url", &self.base_url)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl RemoteClient {
    pub fn new(base_url: impl Into<String>, token: Option<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .user_agent("topicrec")
            .build();
        RemoteClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            token: token.filter(|t| !t.is_empty()),
            agent: ureq::Agent::new_with_config(config),
        }
    }

    pub fn github(token: Option<String>) -> Self {
        Self::new(DEFAULT_API_BASE, token)
    }

    fn get(&self, path: &str, accept: &str) -> Result<(u16, String), FetchError> {
        let url = format!("{}{}", self.base_url, path);
        let mut req = self
            .agent
            .get(&url)
            .header("Accept", accept)
            .header("X-GitHub-Api-Version", "2022-11-28");
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.call().map_err(|e| FetchError::UpstreamUnavailable(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| FetchError::UpstreamUnavailable(e.to_string()))?;
        Ok((status, body))
    }

    /// Fetches description, README, topics, stars and (best effort) the file
    /// list of `full_name`. Wiki content is not exposed by the API and stays
    /// empty.
    pub fn fetch_repo(&self, full_name: &str) -> Result<RepoRecord, FetchError> {
        validate_full_name(full_name).map_err(|_| FetchError::BadName(full_name.to_string()))?;

        let (status, body) = self.get(&format!("/repos/{full_name}"), "application/vnd.github+json")?;
        check_status(status, full_name)?;
        let meta: RepoResponse = serde_json::from_str(&body)
            .map_err(|e| FetchError::UpstreamUnavailable(format!("bad repository payload: {e}")))?;

        let readme = match self.get(&format!("/repos/{full_name}/readme"), "application/vnd.github.raw")? {
            (200..=299, text) => Some(text),
            (404, _) => None,
            (status, _) => {
                check_status(status, full_name)?;
                None
            }
        };

        let mut file_paths = Vec::new();
        if let Some(branch) = &meta.default_branch {
            if let Ok((200..=299, text)) = self.get(
                &format!("/repos/{full_name}/git/trees/{branch}?recursive=1"),
                "application/vnd.github+json",
            ) {
                if let Ok(tree) = serde_json::from_str::<TreeResponse>(&text) {
                    file_paths = tree
                        .tree
                        .into_iter()
                        .filter(|e| e.kind == "blob")
                        .map(|e| e.path)
                        .collect();
                }
            }
        }

        Ok(RepoRecord {
            full_name: full_name.to_string(),
            description: meta.description,
            readme,
            wiki: None,
            file_paths,
            user_topics: meta.topics.into_iter().filter(|t| !t.is_empty()).collect(),
            stars: meta.stargazers_count,
        })
    }
}

fn check_status(status: u16, full_name: &str) -> Result<(), FetchError> {
    match status {
        200..=299 => Ok(()),
        404 => Err(FetchError::NotFound(full_name.to_string())),
        401 | 403 | 429 => Err(FetchError::UpstreamAuth { status }),
        other => Err(FetchError::UpstreamUnavailable(format!("status {other}"))),
    }
}

pub fn fetch_repo(full_name: &str, auth: Option<String>) -> Result<RepoRecord, FetchError> {
    RemoteClient::github(auth).fetch_repo(full_name)
}
