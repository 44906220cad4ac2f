use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::backend::{LlmBackend, LlmError, LlmRequest, Purpose};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o";
pub const DEFAULT_MODEL_AUX: &str = "gpt-3.5-turbo";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub base_url: String,
    /// Never serialized; read from the environment.
    #[serde(skip)]
    pub api_key: String,
    pub model: String,
    /// Model used for room classification.
    pub model_aux: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub timeout_s: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            api_key: String::new(),
            model: DEFAULT_MODEL.into(),
            model_aux: DEFAULT_MODEL_AUX.into(),
            temperature: 0.0,
            max_retries: 3,
            initial_backoff_ms: 500,
            timeout_s: 60,
        }
    }
}

impl HttpConfig {
    /// Reads LLM_API_KEY (required), LLM_BASE_URL, LLM_MODEL and LLM_MODEL_AUX.
    pub fn from_env() -> Result<Self, LlmError> {
        let mut c = Self::default();
        c.apply_env()?;
        Ok(c)
    }

    /// Fills the key and any overrides from the environment.
    pub fn apply_env(&mut self) -> Result<(), LlmError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        self.api_key = var("LLM_API_KEY")
            .ok_or_else(|| LlmError::Config("LLM_API_KEY is not set".into()))?;
        if let Some(v) = var("LLM_BASE_URL") {
            self.base_url = v;
        }
        if let Some(v) = var("LLM_MODEL") {
            self.model = v;
        }
        if let Some(v) = var("LLM_MODEL_AUX") {
            self.model_aux = v;
        }
        Ok(())
    }
}

/// OpenAI-compatible chat-completions client.
pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        if config.api_key.is_empty() {
            return Err(LlmError::Config("missing API key".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_s))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, (bool, String)> {
        let resp = self
            .client
            .post(self.endpoint())
            .bearer_auth(&self.config.api_key)
            .json(body)
            .send()
            .map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.as_u16() == 429 || status.is_server_error();
            let text = resp.text().unwrap_or_default();
            return Err((retry, format!("HTTP {status}: {text}")));
        }
        let v: serde_json::Value = resp.json().map_err(|e| (true, e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(String::from)
            .ok_or_else(|| (false, format!("response without choices[0].message.content: {v}")))
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let model = match request.purpose {
            Purpose::Classify => &self.config.model_aux,
            _ => &self.config.model,
        };
        let body = json!({
            "model": model,
            "messages": request.messages,
            "temperature": self.config.temperature,
        });
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((retry, message)) => {
                    if !retry || attempts > self.config.max_retries {
                        return Err(LlmError::Transport { attempts, message });
                    }
                    warn!("chat completion attempt {attempts} failed: {message}; retrying in {backoff:?}");
                    std::thread::sleep(backoff);
                    backoff *= 2;
                }
            }
        }
    }

    fn name(&self) -> &str {
        "http"
    }
}
