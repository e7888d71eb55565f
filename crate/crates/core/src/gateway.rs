//! Chat-completion and embedding access with record/replay.
//!
//! [`Gateway`] validates requests, enforces the rate limit and the in-flight
//! bound, and forwards to a [`Backend`]:
//!
//! * [`LiveBackend`] speaks the OpenAI-compatible `/chat/completions` and
//!   `/embeddings` wire format through a pluggable [`Transport`];
//! * [`ReplayBackend`] serves exchanges from transcript files;
//! * [`RecordingBackend`] wraps another backend and writes every exchange to
//!   one transcript file per session;
//! * [`FnBackend`] answers from a closure, for tests and fixture authoring.
//!
//! Transcripts are keyed by a SHA-256 digest of model id, preamble, user
//! message and temperature, plus the request's generation index so repeated
//! Step-4 calls with an identical prompt replay in order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TRANSCRIPT_FORMAT: &str = "triz-transcripts/1";

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider returned status {status}: {message}")]
    Provider { status: u16, message: String },
    #[error("no transcript for digest {digest} ({tag})")]
    MissingTranscript { digest: String, tag: String },
    #[error("cannot load transcripts from {}: {message}", path.display())]
    TranscriptLoad { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("API key variable {0} is not set")]
    MissingApiKey(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub api_base: String,
    pub api_key_env: String,
    pub chat_model: String,
    pub embedding_model: String,
    pub timeout_secs: u64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    /// `None` disables rate limiting.
    pub requests_per_minute: Option<u32>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            api_base: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            chat_model: "gpt-4".into(),
            embedding_model: "text-embedding-ada-002".into(),
            timeout_secs: 120,
            retries: 3,
            backoff_ms: 500,
            max_in_flight: 4,
            requests_per_minute: Some(60),
        }
    }
}

/// Attribution carried by every exchange.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTag {
    pub session: String,
    pub step: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    pub model: String,
    #[serde(default)]
    pub generation: u32,
}

impl std::fmt::Display for RequestTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "session={} step={} model={} generation={}", self.session, self.step, self.model, self.generation)?;
        if let Some(s) = &self.strategy {
            write!(f, " strategy={s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    #[serde(default)]
    pub preamble: String,
    pub user_message: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
    pub tag: RequestTag,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(0.0..=2.0).contains(&self.temperature) || self.temperature.is_nan() {
            return Err(GatewayError::InvalidRequest(format!("temperature {} outside 0..=2", self.temperature)));
        }
        if self.user_message.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("user message is empty".into()));
        }
        if self.model_id.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("model id is empty".into()));
        }
        if self.tag.session.is_empty() {
            return Err(GatewayError::InvalidRequest("request tag has no session".into()));
        }
        Ok(())
    }

    /// Digest of the fields that define the exchange. Temperature is
    /// formatted to three decimals so 1 and 1.0 agree.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for part in [self.model_id.as_str(), self.preamble.as_str(), self.user_message.as_str()] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        h.update(format!("{:.3}", self.temperature).as_bytes());
        hex::encode(h.finalize())
    }

    pub fn replay_key(&self) -> String {
        format!("{}#{}", self.digest(), self.tag.generation)
    }

    pub fn transcript_id(&self) -> String {
        format!("t-{}-{}", &self.digest()[..12], self.tag.generation)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub model_id: String,
    pub usage: TokenUsage,
    pub latency_ms: u64,
    pub transcript_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingBatch {
    pub inputs: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub model_id: String,
    pub dimension: usize,
}

pub fn embedding_key(model_id: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

pub trait Backend: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
    fn embed(&self, model_id: &str, texts: &[String], tag: &RequestTag) -> Result<Vec<Vec<f64>>, GatewayError>;
}

struct TokenBucket {
    capacity: f64,
    per_sec: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    fn new(per_minute: u32) -> Self {
        let capacity = per_minute.max(1) as f64;
        Self { capacity, per_sec: capacity / 60.0, state: Mutex::new((capacity, Instant::now())) }
    }

    fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap();
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.per_sec).min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - s.0) / self.per_sec)
            };
            std::thread::sleep(wait);
        }
    }
}

struct InFlight {
    limit: usize,
    count: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().unwrap();
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.count.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

/// Shareable entry point; wrap in `Arc` to use from several threads.
pub struct Gateway {
    backend: Box<dyn Backend>,
    config: GatewayConfig,
    bucket: Option<TokenBucket>,
    in_flight: InFlight,
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>, config: GatewayConfig) -> Self {
        let bucket = config.requests_per_minute.map(TokenBucket::new);
        let in_flight = InFlight { limit: config.max_in_flight.max(1), count: Mutex::new(0), freed: Condvar::new() };
        Self { backend, config, bucket, in_flight }
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let _permit = self.in_flight.acquire();
        if let Some(b) = &self.bucket {
            b.acquire();
        }
        log::debug!("chat {}", request.tag);
        self.backend.chat(request)
    }

    pub fn embed(&self, texts: &[String], tag: &RequestTag) -> Result<EmbeddingBatch, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::InvalidRequest("no texts to embed".into()));
        }
        if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(GatewayError::InvalidRequest(format!("input {i} is blank")));
        }
        let model = &self.config.embedding_model;
        let vectors = {
            let _permit = self.in_flight.acquire();
            if let Some(b) = &self.bucket {
                b.acquire();
            }
            self.backend.embed(model, texts, tag)?
        };
        let dimension = vectors.first().map_or(0, Vec::len);
        if vectors.len() != texts.len() || dimension == 0 || vectors.iter().any(|v| v.len() != dimension) {
            return Err(GatewayError::Provider { status: 200, message: "embedding response has inconsistent shape".into() });
        }
        Ok(EmbeddingBatch { inputs: texts.to_vec(), vectors, model_id: model.clone(), dimension })
    }
}

/// Where model traffic goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendMode {
    Live,
    /// Serve recorded transcripts from a directory; never touches the network.
    Replay(PathBuf),
    /// Call the live provider and append every exchange to a directory.
    Record(PathBuf),
}

impl Gateway {
    /// Builds a gateway for `mode`. Replay ignores the rate limit.
    pub fn open(mode: &BackendMode, config: GatewayConfig) -> Result<Self, GatewayError> {
        Ok(match mode {
            BackendMode::Live => Self::new(Box::new(LiveBackend::from_env(config.clone())?), config),
            BackendMode::Replay(dir) => Self::new(Box::new(ReplayBackend::from_path(dir)?), GatewayConfig { requests_per_minute: None, ..config }),
            BackendMode::Record(dir) => {
                let live = LiveBackend::from_env(config.clone())?;
                Self::new(Box::new(RecordingBackend::new(Box::new(live), dir)?), config)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// One HTTP POST. `Err` means no reply was received (connect failure, timeout).
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, api_key: &str, body: &Value, timeout: Duration) -> Result<HttpReply, String>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| GatewayError::Transport { attempts: 0, message: e.to_string() })?;
        Ok(Self { client })
    }
}

impl Transport for ReqwestTransport {
    fn post_json(&self, url: &str, api_key: &str, body: &Value, timeout: Duration) -> Result<HttpReply, String> {
        let resp = self.client.post(url).bearer_auth(api_key).timeout(timeout).json(body).send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

pub struct LiveBackend {
    transport: Box<dyn Transport>,
    config: GatewayConfig,
    api_key: String,
}

impl LiveBackend {
    /// Reads the API key from the configured environment variable.
    pub fn from_env(config: GatewayConfig) -> Result<Self, GatewayError> {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.trim().is_empty()).ok_or_else(|| GatewayError::MissingApiKey(config.api_key_env.clone()))?;
        Ok(Self::with_transport(Box::new(ReqwestTransport::new()?), config, api_key))
    }

    pub fn with_transport(transport: Box<dyn Transport>, config: GatewayConfig, api_key: String) -> Self {
        Self { transport, config, api_key }
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, GatewayError> {
        let url = format!("{}/{}", self.config.api_base.trim_end_matches('/'), path);
        let timeout = Duration::from_secs(self.config.timeout_secs);
        let attempts = self.config.retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                let backoff = self.config.backoff_ms.saturating_mul(1 << (attempt - 2).min(10));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            match self.transport.post_json(&url, &self.api_key, body, timeout) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    return serde_json::from_str(&reply.body)
                        .map_err(|e| GatewayError::Provider { status: reply.status, message: format!("unparseable body: {e}") });
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    last = format!("status {}: {}", reply.status, provider_message(&reply.body));
                    log::warn!("{url}: attempt {attempt}/{attempts} failed: {last}");
                }
                Ok(reply) => return Err(GatewayError::Provider { status: reply.status, message: provider_message(&reply.body) }),
                Err(e) => {
                    log::warn!("{url}: attempt {attempt}/{attempts} failed: {e}");
                    last = e;
                }
            }
        }
        Err(GatewayError::Transport { attempts, message: last })
    }
}

fn provider_message(body: &str) -> String {
    serde_json::from_str::<Value>(body)
        .ok()
        .and_then(|v| v.pointer("/error/message").and_then(Value::as_str).map(str::to_owned))
        .unwrap_or_else(|| body.chars().take(200).collect())
}

impl Backend for LiveBackend {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut messages = Vec::new();
        if !request.preamble.is_empty() {
            messages.push(json!({"role": "system", "content": request.preamble}));
        }
        messages.push(json!({"role": "user", "content": request.user_message}));
        let mut body = json!({"model": request.model_id, "messages": messages, "temperature": request.temperature});
        if let Some(max) = request.max_output_tokens {
            body["max_tokens"] = json!(max);
        }
        let started = Instant::now();
        let v = self.post("chat/completions", &body)?;
        let text = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| GatewayError::Provider { status: 200, message: "response has no message content".into() })?
            .to_owned();
        let usage = TokenUsage {
            prompt_tokens: v.pointer("/usage/prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
            completion_tokens: v.pointer("/usage/completion_tokens").and_then(Value::as_u64).unwrap_or(0),
        };
        Ok(ChatResponse {
            text,
            model_id: v.get("model").and_then(Value::as_str).unwrap_or(&request.model_id).to_owned(),
            usage,
            latency_ms: started.elapsed().as_millis() as u64,
            transcript_id: request.transcript_id(),
        })
    }

    fn embed(&self, model_id: &str, texts: &[String], _tag: &RequestTag) -> Result<Vec<Vec<f64>>, GatewayError> {
        let v = self.post("embeddings", &json!({"model": model_id, "input": texts}))?;
        let data = v
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| GatewayError::Provider { status: 200, message: "response has no data".into() })?;
        let mut rows: Vec<(usize, Vec<f64>)> = data
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let idx = d.get("index").and_then(Value::as_u64).map_or(i, |x| x as usize);
                let vec = d.get("embedding").and_then(Value::as_array).map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default();
                (idx, vec)
            })
            .collect();
        rows.sort_by_key(|r| r.0);
        Ok(rows.into_iter().map(|r| r.1).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTranscript {
    pub key: String,
    pub request: ChatRequest,
    pub response: ChatResponse,
    pub recorded_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTranscript {
    pub key: String,
    pub model_id: String,
    pub input: String,
    pub vector: Vec<f64>,
}

/// On-disk transcript document, one per session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub format: String,
    pub session: String,
    #[serde(default)]
    pub chats: Vec<ChatTranscript>,
    #[serde(default)]
    pub embeddings: Vec<EmbeddingTranscript>,
}

impl TranscriptFile {
    fn new(session: &str) -> Self {
        Self { format: TRANSCRIPT_FORMAT.into(), session: session.into(), chats: Vec::new(), embeddings: Vec::new() }
    }
}

/// In-memory index over any number of transcript files.
#[derive(Debug, Clone, Default)]
pub struct TranscriptStore {
    chats: BTreeMap<String, ChatTranscript>,
    embeddings: BTreeMap<String, Vec<f64>>,
}

impl TranscriptStore {
    /// Loads a single transcript file or every `*.json` file in a directory.
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let mut store = Self::default();
        let files = if path.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|source| GatewayError::Io { path: path.to_owned(), source })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            files.sort();
            files
        } else {
            vec![path.to_owned()]
        };
        for file in files {
            let text = std::fs::read_to_string(&file).map_err(|source| GatewayError::Io { path: file.clone(), source })?;
            let doc: TranscriptFile =
                serde_json::from_str(&text).map_err(|e| GatewayError::TranscriptLoad { path: file.clone(), message: e.to_string() })?;
            if doc.format != TRANSCRIPT_FORMAT {
                return Err(GatewayError::TranscriptLoad { path: file, message: format!("unsupported format {:?}", doc.format) });
            }
            store.insert(doc);
        }
        Ok(store)
    }

    pub fn insert(&mut self, doc: TranscriptFile) {
        for c in doc.chats {
            self.chats.insert(c.key.clone(), c);
        }
        for e in doc.embeddings {
            self.embeddings.insert(e.key, e.vector);
        }
    }

    pub fn chat_count(&self) -> usize {
        self.chats.len()
    }
}

pub struct ReplayBackend {
    store: TranscriptStore,
    fallback_embedder: Option<HashingEmbedder>,
}

impl ReplayBackend {
    pub fn new(store: TranscriptStore) -> Self {
        Self { store, fallback_embedder: None }
    }

    pub fn from_path(path: &Path) -> Result<Self, GatewayError> {
        Ok(Self::new(TranscriptStore::load(path)?))
    }

    /// Embeds texts missing from the transcripts with a hashing embedder
    /// instead of failing.
    pub fn with_embedding_fallback(mut self, embedder: HashingEmbedder) -> Self {
        self.fallback_embedder = Some(embedder);
        self
    }
}

impl Backend for ReplayBackend {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let key = request.replay_key();
        self.store
            .chats
            .get(&key)
            .map(|t| t.response.clone())
            .ok_or_else(|| GatewayError::MissingTranscript { digest: key, tag: request.tag.to_string() })
    }

    fn embed(&self, model_id: &str, texts: &[String], tag: &RequestTag) -> Result<Vec<Vec<f64>>, GatewayError> {
        texts
            .iter()
            .map(|t| {
                let key = embedding_key(model_id, t);
                match (self.store.embeddings.get(&key), &self.fallback_embedder) {
                    (Some(v), _) => Ok(v.clone()),
                    (None, Some(h)) => Ok(h.vector(t)),
                    (None, None) => Err(GatewayError::MissingTranscript { digest: key, tag: tag.to_string() }),
                }
            })
            .collect()
    }
}

/// Forwards to `inner` and appends every exchange to `<dir>/<session>.json`.
pub struct RecordingBackend {
    inner: Box<dyn Backend>,
    dir: PathBuf,
    files: Mutex<BTreeMap<String, TranscriptFile>>,
}

impl RecordingBackend {
    /// Fails early if the directory cannot be created.
    pub fn new(inner: Box<dyn Backend>, dir: &Path) -> Result<Self, GatewayError> {
        std::fs::create_dir_all(dir).map_err(|source| GatewayError::Io { path: dir.to_owned(), source })?;
        Ok(Self { inner, dir: dir.to_owned(), files: Mutex::new(BTreeMap::new()) })
    }

    fn persist(&self, session: &str, update: impl FnOnce(&mut TranscriptFile)) -> Result<(), GatewayError> {
        let mut files = self.files.lock().unwrap();
        let path = self.dir.join(format!("{}.json", sanitize(session)));
        let doc = match files.entry(session.to_owned()) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                let existing = std::fs::read_to_string(&path).ok().and_then(|t| serde_json::from_str(&t).ok());
                e.insert(existing.unwrap_or_else(|| TranscriptFile::new(session)))
            }
        };
        update(doc);
        let text = serde_json::to_string_pretty(doc).expect("transcripts serialize");
        std::fs::write(&path, text + "\n").map_err(|source| GatewayError::Io { path, source })
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

impl Backend for RecordingBackend {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let response = self.inner.chat(request)?;
        let entry = ChatTranscript {
            key: request.replay_key(),
            request: request.clone(),
            response: response.clone(),
            recorded_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        self.persist(&request.tag.session, |doc| {
            doc.chats.retain(|c| c.key != entry.key);
            doc.chats.push(entry);
        })?;
        Ok(response)
    }

    fn embed(&self, model_id: &str, texts: &[String], tag: &RequestTag) -> Result<Vec<Vec<f64>>, GatewayError> {
        let vectors = self.inner.embed(model_id, texts, tag)?;
        self.persist(&tag.session, |doc| {
            for (t, v) in texts.iter().zip(&vectors) {
                let key = embedding_key(model_id, t);
                doc.embeddings.retain(|e| e.key != key);
                doc.embeddings.push(EmbeddingTranscript { key, model_id: model_id.to_owned(), input: t.clone(), vector: v.clone() });
            }
        })?;
        Ok(vectors)
    }
}

type ChatFn = dyn Fn(&ChatRequest) -> Result<String, GatewayError> + Send + Sync;

/// Answers chats from a closure and embeds with a [`HashingEmbedder`].
pub struct FnBackend {
    respond: Box<ChatFn>,
    embedder: HashingEmbedder,
}

impl FnBackend {
    pub fn new(respond: impl Fn(&ChatRequest) -> Result<String, GatewayError> + Send + Sync + 'static) -> Self {
        Self { respond: Box::new(respond), embedder: HashingEmbedder::default() }
    }
}

impl Backend for FnBackend {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let text = (self.respond)(request)?;
        Ok(ChatResponse {
            usage: TokenUsage {
                prompt_tokens: request.user_message.split_whitespace().count() as u64,
                completion_tokens: text.split_whitespace().count() as u64,
            },
            text,
            model_id: request.model_id.clone(),
            latency_ms: 0,
            transcript_id: request.transcript_id(),
        })
    }

    fn embed(&self, _model_id: &str, texts: &[String], _tag: &RequestTag) -> Result<Vec<Vec<f64>>, GatewayError> {
        Ok(texts.iter().map(|t| self.embedder.vector(t)).collect())
    }
}

/// Deterministic offline embedder: signed feature hashing of lowercase word
/// unigrams and bigrams, L2-normalised.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    pub dimension: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self { dimension: 256 }
    }
}

impl HashingEmbedder {
    pub fn vector(&self, text: &str) -> Vec<f64> {
        let words = crate::text::tokens(text);
        let mut v = vec![0.0; self.dimension];
        let grams = words.iter().cloned().chain(words.windows(2).map(|w| format!("{} {}", w[0], w[1])));
        for g in grams {
            let d = Sha256::digest(g.as_bytes());
            let idx = u64::from_le_bytes(d[..8].try_into().unwrap()) as usize % self.dimension;
            v[idx] += if d[8] & 1 == 0 { 1.0 } else { -1.0 };
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        } else {
            v[0] = 1.0;
        }
        v
    }
}
