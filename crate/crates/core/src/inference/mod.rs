//! Running prompt files through a chat model, several times over.

mod backend;
mod degenerate;

use std::path::{Path, PathBuf};
use std::time::Duration;

use futures::{StreamExt, TryStreamExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jsonl::{self, JsonlError};
use crate::promptgen::PromptRecord;

pub use backend::{
    BackendError, ChatBackend, Completion, CompletionRequest, HttpBackend, MockModel, UnknownMock,
};
pub use degenerate::{classify_degenerate, DegenerateThresholds};

#[derive(Debug, thiserror::Error)]
pub enum InferenceError {
    #[error("endpoint rejected credentials: {0}")]
    Auth(String),
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("no run seeds given")]
    NoSeeds,
    #[error("hashing {path}: {source}")]
    Digest {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Never written to manifests or hashed.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    /// Per-request timeout in seconds.
    pub timeout: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    /// First retry delay; doubles on each further attempt.
    pub initial_backoff_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1".into(),
            model_name: "model".into(),
            api_key: None,
            timeout: 60.0,
            max_retries: 3,
            max_in_flight: 8,
            temperature: 0.0,
            max_tokens: 256,
            initial_backoff_ms: 500,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        let bad = |m: &str| Err(InferenceError::Config(m.to_string()));
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be at least 1");
        }
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return bad("timeout must be a positive number of seconds");
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return bad("temperature must be non-negative");
        }
        Ok(())
    }

    /// sha256 of the canonical JSON form, without the api key.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Degenerate,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateReason {
    Empty,
    PromptEcho,
    RepetitionLoop,
    Malformed,
}

impl DegenerateReason {
    pub fn name(self) -> &'static str {
        match self {
            DegenerateReason::Empty => "empty",
            DegenerateReason::PromptEcho => "prompt_echo",
            DegenerateReason::RepetitionLoop => "repetition_loop",
            DegenerateReason::Malformed => "malformed",
        }
    }
}

/// One line of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub pair_id: String,
    pub run_seed: u64,
    pub raw_text: String,
    pub latency_ms: u64,
    pub status: RunStatus,
    pub degenerate_reason: Option<DegenerateReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

async fn complete_with_retries(
    backend: &dyn ChatBackend,
    request: CompletionRequest<'_>,
    config: &EndpointConfig,
) -> Result<Completion, BackendError> {
    let mut attempt = 0u32;
    loop {
        match backend.complete(request).await {
            Err(BackendError::Transient(msg)) if attempt < config.max_retries => {
                let delay = config.initial_backoff_ms.saturating_mul(1u64 << attempt.min(16));
                log::debug!(
                    "{}: attempt {} failed ({msg}); retrying in {delay} ms",
                    request.prompt.pair_id,
                    attempt + 1
                );
                tokio::time::sleep(Duration::from_millis(delay)).await;
                attempt += 1;
            }
            Err(BackendError::Transient(msg)) => {
                return Err(BackendError::Transient(format!(
                    "{msg} (gave up after {} attempts)",
                    attempt + 1
                )))
            }
            other => return other,
        }
    }
}

/// Completes every prompt once, with at most `config.max_in_flight`
/// requests outstanding. Output row `i` belongs to prompt `i`. Rejected
/// credentials abort the run; any other failure becomes an error row.
pub async fn infer_run(
    prompts: &[PromptRecord],
    backend: &dyn ChatBackend,
    config: &EndpointConfig,
    thresholds: &DegenerateThresholds,
    run_seed: u64,
) -> Result<Vec<RunOutput>, InferenceError> {
    config.validate()?;
    futures::stream::iter(prompts.iter().enumerate())
        .map(|(index, prompt)| async move {
            let request = CompletionRequest {
                index,
                prompt,
                run_seed,
            };
            let row = |raw_text: String, latency_ms, status, reason, error| RunOutput {
                pair_id: prompt.pair_id.clone(),
                run_seed,
                raw_text,
                latency_ms,
                status,
                degenerate_reason: reason,
                error,
            };
            match complete_with_retries(backend, request, config).await {
                Ok(c) => {
                    let (status, reason) = classify_degenerate(&c.text, prompt, thresholds);
                    Ok(row(c.text, c.latency_ms, status, reason, None))
                }
                Err(BackendError::Auth(msg)) => Err(InferenceError::Auth(msg)),
                Err(e) => Ok(row(String::new(), 0, RunStatus::Error, None, Some(e.to_string()))),
            }
        })
        .buffered(config.max_in_flight)
        .try_collect()
        .await
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunFileStatus {
    Complete,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub file: String,
    pub status: RunFileStatus,
    pub rows: usize,
    pub ok: usize,
    pub degenerate: usize,
    pub errors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// `manifest.json` of a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub backend: String,
    pub endpoint: EndpointConfig,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub prompt_file: String,
    pub prompt_sha256: String,
    pub prompts: usize,
    pub runs: Vec<RunRecord>,
}

impl RunManifest {
    pub fn complete_runs(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| r.status == RunFileStatus::Complete)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn run_file_name(seed: u64) -> String {
    format!("run_seed_{seed}.jsonl")
}

pub fn file_sha256(path: &Path) -> Result<String, InferenceError> {
    let bytes = std::fs::read(path).map_err(|source| InferenceError::Digest {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Where the prompts of a multi-run came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSource {
    pub name: String,
    pub sha256: String,
}

impl PromptSource {
    pub fn from_file(path: &Path) -> Result<Self, InferenceError> {
        Ok(Self {
            name: path.display().to_string(),
            sha256: file_sha256(path)?,
        })
    }
}

/// Options for [`multi_run`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MultiRunOptions {
    /// Run all seeds at once instead of one after another.
    pub parallel_runs: bool,
}

fn summarize(seed: u64, rows: &[RunOutput]) -> RunRecord {
    let count = |s| rows.iter().filter(|r| r.status == s).count();
    RunRecord {
        seed,
        file: run_file_name(seed),
        status: RunFileStatus::Complete,
        rows: rows.len(),
        ok: count(RunStatus::Ok),
        degenerate: count(RunStatus::Degenerate),
        errors: count(RunStatus::Error),
        failure: None,
    }
}

fn missing(seed: u64, why: String) -> RunRecord {
    RunRecord {
        seed,
        file: run_file_name(seed),
        status: RunFileStatus::Missing,
        rows: 0,
        ok: 0,
        degenerate: 0,
        errors: 0,
        failure: Some(why),
    }
}

/// Runs [`infer_run`] once per seed and writes `run_seed_<seed>.jsonl`
/// plus `manifest.json` into `out_dir`.
///
/// A run that fails keeps the others; the manifest marks it missing. An
/// authentication failure stops the remaining runs too, and is returned
/// after the manifest is written.
#[allow(clippy::too_many_arguments)]
pub async fn multi_run(
    prompts: &[PromptRecord],
    source: &PromptSource,
    backend: &dyn ChatBackend,
    config: &EndpointConfig,
    thresholds: &DegenerateThresholds,
    seeds: &[u64],
    out_dir: &Path,
    options: MultiRunOptions,
) -> Result<RunManifest, InferenceError> {
    if seeds.is_empty() {
        return Err(InferenceError::NoSeeds);
    }
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| JsonlError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let one = |seed: u64| async move {
        let rows = infer_run(prompts, backend, config, thresholds, seed).await?;
        jsonl::write_jsonl_file(&out_dir.join(run_file_name(seed)), &rows)?;
        Ok::<_, InferenceError>(summarize(seed, &rows))
    };

    let mut runs = Vec::with_capacity(seeds.len());
    let mut auth: Option<String> = None;
    let results: Vec<Result<RunRecord, InferenceError>> = if options.parallel_runs {
        futures::future::join_all(seeds.iter().map(|&s| one(s))).await
    } else {
        let mut v = Vec::new();
        for &s in seeds {
            let r = one(s).await;
            let stop = matches!(r, Err(InferenceError::Auth(_)));
            v.push(r);
            if stop {
                break;
            }
        }
        v
    };
    for (i, &seed) in seeds.iter().enumerate() {
        match results.get(i) {
            Some(Ok(r)) => runs.push(r.clone()),
            Some(Err(InferenceError::Auth(m))) => {
                auth.get_or_insert_with(|| m.clone());
                runs.push(missing(seed, format!("authentication failed: {m}")));
            }
            Some(Err(e)) => {
                log::error!("run with seed {seed} failed: {e}");
                runs.push(missing(seed, e.to_string()));
            }
            None => runs.push(missing(seed, "not attempted after authentication failure".into())),
        }
    }

    let manifest = RunManifest {
        backend: backend.describe(),
        endpoint: config.clone(),
        config_hash: config.config_hash(),
        seeds: seeds.to_vec(),
        prompt_file: source.name.clone(),
        prompt_sha256: source.sha256.clone(),
        prompts: prompts.len(),
        runs,
    };
    write_manifest(out_dir, &manifest)?;
    match auth {
        Some(m) => Err(InferenceError::Auth(m)),
        None => Ok(manifest),
    }
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), InferenceError> {
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).map_err(JsonlError::Serialize)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| JsonlError::Io { path, source })?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest, InferenceError> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|source| JsonlError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| {
        InferenceError::Jsonl(JsonlError::Parse {
            path,
            line: source.line(),
            source,
        })
    })
}

pub fn read_run_file(path: &Path) -> Result<Vec<RunOutput>, InferenceError> {
    Ok(jsonl::read_jsonl(path)?)
}

/// [`multi_run`] on a fresh multi-threaded runtime.
#[allow(clippy::too_many_arguments)]
pub fn multi_run_blocking(
    prompts: &[PromptRecord],
    source: &PromptSource,
    backend: &dyn ChatBackend,
    config: &EndpointConfig,
    thresholds: &DegenerateThresholds,
    seeds: &[u64],
    out_dir: &Path,
    options: MultiRunOptions,
) -> Result<RunManifest, InferenceError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime")
        .block_on(multi_run(prompts, source, backend, config, thresholds, seeds, out_dir, options))
}
