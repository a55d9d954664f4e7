//! Caption generation through a pluggable chat-completion backend.
//!
//! [`request_caption`] retries transient backend failures with exponential
//! backoff; [`caption_all`] fans requests out over a bounded number of
//! worker threads and returns results in record order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use super::ManifestRecord;
use crate::error::{Error, Result};

/// Image-captioning instruction sent verbatim with every image.
pub const IMAGE_CAPTION_PROMPT: &str = "Directly describe with brevity and as brief as possible the scene or characters without any introductory phrase like 'This image shows', 'In the scene', 'This image depicts' or similar phrases. Just start describing the scene please.";

/// System message of the pairwise preference-study prompt. Stored for
/// reference; the study itself is not run by this crate.
pub const PREFERENCE_STUDY_SYSTEM: &str = "As an AI visual assistant, you are analyzing two specific images. When presented with a specific caption, it is required to evaluate visual aesthetics, prompt coherence and fine details.";

/// User message of the preference-study prompt; `<prompt>` is replaced by
/// the image caption.
pub const PREFERENCE_STUDY_TEXT: &str = "The caption for the two images is: <prompt>. Please answer the following questions:
1. Visual Aesthetics: Given the prompt, which image is of higher-quality and aesthetically more pleasing?
2. Prompt Adherence: Which image looks more representative to the text shown above and faithfully follows it?
3. Fine Details: Which image more accurately represents the fine visual details? Focus on clarity, sharpness, and texture. Assess the fidelity of fine elements such as edges, patterns, and nuances in color. The more precise representation of these details is preferred! Ignore other aspects.
Please respond me strictly in the following format:
1. Visual Aesthetics: <the first image is better> or <the second image is better>. The reason is <give your reason here>.
2. Prompt Adherence: <the first image is better> or <the second image is better>. The reason is <give your reason here>.
3. Fine Details: <the first image is better> or <the second image is better>. The reason is <give your reason here>.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system: Option<String>,
    pub text: String,
}

impl PromptTemplate {
    pub fn image_caption() -> Self {
        Self {
            system: None,
            text: IMAGE_CAPTION_PROMPT.to_owned(),
        }
    }

    pub fn preference_study(caption: &str) -> Self {
        Self {
            system: Some(PREFERENCE_STUDY_SYSTEM.to_owned()),
            text: PREFERENCE_STUDY_TEXT.replace("<prompt>", caption),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendError {
    /// Worth retrying: timeouts, connection failures, rate limiting, 5xx.
    Transient(String),
    Permanent(String),
}

impl fmt::Display for BackendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendError::Transient(m) => write!(f, "transient: {m}"),
            BackendError::Permanent(m) => write!(f, "permanent: {m}"),
        }
    }
}

pub trait CaptionBackend: Send + Sync {
    /// Returns a caption for the image at `image_ref` (a path or URL).
    fn caption(&self, image_ref: &str, template: &PromptTemplate) -> std::result::Result<String, BackendError>;
}

/// Offline backend returning `caption:<image_ref>`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoBackend;

impl CaptionBackend for EchoBackend {
    fn caption(&self, image_ref: &str, _template: &PromptTemplate) -> std::result::Result<String, BackendError> {
        Ok(format!("caption:{image_ref}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << retry.min(16))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionOutcome {
    pub caption: String,
    pub retries: u32,
}

fn caption_with_retries(
    image_ref: &str,
    template: &PromptTemplate,
    backend: &dyn CaptionBackend,
    policy: &RetryPolicy,
) -> Result<CaptionOutcome> {
    let mut retries = 0;
    loop {
        match backend.caption(image_ref, template) {
            Ok(text) => {
                let caption = text.trim().to_owned();
                if caption.is_empty() {
                    return Err(Error::Validation(format!("empty caption for {image_ref}")));
                }
                return Ok(CaptionOutcome { caption, retries });
            }
            Err(BackendError::Transient(msg)) if retries < policy.max_retries => {
                log::warn!("caption request for {image_ref} failed ({msg}), retrying");
                std::thread::sleep(policy.delay(retries));
                retries += 1;
            }
            Err(e) => {
                return Err(Error::Transport {
                    attempts: retries + 1,
                    message: format!("{image_ref}: {e}"),
                })
            }
        }
    }
}

/// Captions one record and stores the result on it.
pub fn request_caption(
    record: &mut ManifestRecord,
    template: &PromptTemplate,
    backend: &dyn CaptionBackend,
    policy: &RetryPolicy,
) -> Result<CaptionOutcome> {
    let outcome = caption_with_retries(&record.path, template, backend, policy)?;
    record.caption = Some(outcome.caption.clone());
    Ok(outcome)
}

/// Captions every record lacking a caption (or all of them when
/// `overwrite`), running at most `concurrency` requests at once. The
/// returned vector is indexed like `records`; `None` marks skipped records.
pub fn caption_all(
    records: &mut [ManifestRecord],
    template: &PromptTemplate,
    backend: &dyn CaptionBackend,
    policy: &RetryPolicy,
    concurrency: usize,
    overwrite: bool,
) -> Vec<Option<Result<CaptionOutcome>>> {
    let todo: Vec<usize> = (0..records.len())
        .filter(|&i| overwrite || records[i].caption.is_none())
        .collect();
    let results: Mutex<Vec<Option<Result<CaptionOutcome>>>> = Mutex::new((0..records.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = concurrency.max(1).min(todo.len().max(1));
    {
        let paths: Vec<&str> = records.iter().map(|r| r.path.as_str()).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&i) = todo.get(k) else { break };
                    let outcome = caption_with_retries(paths[i], template, backend, policy);
                    results.lock().expect("caption results lock")[i] = Some(outcome);
                });
            }
        });
    }
    let results = results.into_inner().expect("caption results lock");
    for (record, result) in records.iter_mut().zip(&results) {
        if let Some(Ok(outcome)) = result {
            record.caption = Some(outcome.caption.clone());
        }
    }
    results
}

/// API credential that never appears in `Debug` output or logs.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

pub const ENV_ENDPOINT: &str = "UHREVAL_CAPTION_ENDPOINT";
pub const ENV_TOKEN: &str = "UHREVAL_CAPTION_TOKEN";
pub const ENV_MODEL: &str = "UHREVAL_CAPTION_MODEL";
pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpCaptionConfig {
    pub endpoint: String,
    pub token: Option<Secret>,
    pub model: String,
    pub timeout: Duration,
    pub max_tokens: u32,
    /// Directory that relative image paths are resolved against.
    pub image_root: Option<PathBuf>,
}

#[derive(Deserialize)]
struct ConfigFile {
    endpoint: String,
    #[serde(default)]
    token: Option<String>,
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    timeout_secs: Option<u64>,
}

impl HttpCaptionConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            token: None,
            model: DEFAULT_MODEL.to_owned(),
            timeout: Duration::from_secs(60),
            max_tokens: 300,
            image_root: None,
        }
    }

    /// Reads endpoint, token and model from `UHREVAL_CAPTION_*` variables.
    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let endpoint = get(ENV_ENDPOINT)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::invalid(format!("{ENV_ENDPOINT} is not set")))?;
        let mut cfg = Self::new(endpoint);
        cfg.token = get(ENV_TOKEN).filter(|s| !s.is_empty()).map(Secret::new);
        if let Some(model) = get(ENV_MODEL).filter(|s| !s.is_empty()) {
            cfg.model = model;
        }
        Ok(cfg)
    }

    /// JSON config file with `endpoint` and optional `token`, `model`,
    /// `timeout_secs`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ConfigFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::new(file.endpoint);
        cfg.token = file.token.map(Secret::new);
        if let Some(model) = file.model {
            cfg.model = model;
        }
        if let Some(t) = file.timeout_secs {
            cfg.timeout = Duration::from_secs(t);
        }
        Ok(cfg)
    }
}

/// Chat-completion backend speaking the common `/v1/chat/completions` JSON
/// shape, with the image attached as a URL or an inline data URL.
pub struct HttpCaptionBackend {
    config: HttpCaptionConfig,
    agent: ureq::Agent,
}

impl fmt::Debug for HttpCaptionBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpCaptionBackend")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl HttpCaptionBackend {
    pub fn new(config: HttpCaptionConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn image_url(&self, image_ref: &str) -> std::result::Result<String, BackendError> {
        if image_ref.starts_with("http://") || image_ref.starts_with("https://") || image_ref.starts_with("data:") {
            return Ok(image_ref.to_owned());
        }
        let path = match &self.config.image_root {
            Some(root) => root.join(image_ref),
            None => PathBuf::from(image_ref),
        };
        let bytes =
            std::fs::read(&path).map_err(|e| BackendError::Permanent(format!("reading {}: {e}", path.display())))?;
        let mime = match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("jpg" | "jpeg") => "image/jpeg",
            Some("webp") => "image/webp",
            _ => "image/png",
        };
        Ok(format!(
            "data:{mime};base64,{}",
            base64::engine::general_purpose::STANDARD.encode(bytes)
        ))
    }

    pub fn request_body(&self, image_url: &str, template: &PromptTemplate) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &template.system {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({
            "role": "user",
            "content": [
                {"type": "text", "text": template.text},
                {"type": "image_url", "image_url": {"url": image_url}},
            ],
        }));
        json!({
            "model": self.config.model,
            "messages": messages,
            "max_tokens": self.config.max_tokens,
        })
    }
}

impl CaptionBackend for HttpCaptionBackend {
    fn caption(&self, image_ref: &str, template: &PromptTemplate) -> std::result::Result<String, BackendError> {
        let body = self.request_body(&self.image_url(image_ref)?, template);
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(token) = &self.config.token {
            req = req.header("Authorization", &format!("Bearer {}", token.expose()));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(BackendError::Transient(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(BackendError::Permanent(format!("HTTP {status}")));
        }
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Transient(format!("reading response: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| BackendError::Permanent("response has no choices[0].message.content".into()))
    }
}
