//! Chat-completion client used to pick a surrogate language.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::FallbackError;

/// Environment variable holding the API key, unless the config names another.
pub const API_KEY_ENV: &str = "EMO_LLM_API_KEY";
/// Environment variable that overrides the configured endpoint URL.
pub const ENDPOINT_ENV: &str = "EMO_LLM_ENDPOINT";

pub const KNOWN_PLACEHOLDER: &str = "{known_languages}";
pub const GIVEN_PLACEHOLDER: &str = "{given_language}";

/// Language-family query sent to the model.
pub const DEFAULT_PROMPT_TEMPLATE: &str = "You are a linguist working on language classification and are \
familiar with the given languages: {known_languages}. Please select the language from the list that is \
most similar to {given_language} based on language family and geographic distance in terms of population \
distribution.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmBackendConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_template")]
    pub prompt_template: String,
}

fn default_key_env() -> String {
    API_KEY_ENV.to_string()
}

fn default_timeout() -> u64 {
    60
}

fn default_template() -> String {
    DEFAULT_PROMPT_TEMPLATE.to_string()
}

impl LlmBackendConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: default_key_env(),
            timeout_secs: default_timeout(),
            prompt_template: default_template(),
        }
    }

    pub fn validate(&self) -> Result<(), FallbackError> {
        for ph in [KNOWN_PLACEHOLDER, GIVEN_PLACEHOLDER] {
            let n = self.prompt_template.matches(ph).count();
            if n != 1 {
                return Err(FallbackError::Config(format!(
                    "prompt template must contain {ph} exactly once, found {n}"
                )));
            }
        }
        Ok(())
    }

    /// The configured endpoint, unless overridden by the environment.
    pub fn effective_endpoint(&self) -> String {
        std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty()).unwrap_or_else(|| self.endpoint.clone())
    }
}

/// Fills the template. Byte-deterministic for equal inputs.
pub fn render_prompt(config: &LlmBackendConfig, known: &[&str], given: &str) -> Result<String, FallbackError> {
    config.validate()?;
    if known.is_empty() {
        return Err(FallbackError::Config("list of known languages is empty".into()));
    }
    Ok(config.prompt_template.replace(KNOWN_PLACEHOLDER, &known.join(", ")).replace(GIVEN_PLACEHOLDER, given))
}

/// Sends one prompt and returns the reply text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, FallbackError>;
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: String,
}

/// Blocking HTTP client for OpenAI-style `chat/completions` endpoints.
pub struct HttpChatTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl HttpChatTransport {
    pub fn from_config(config: &LlmBackendConfig) -> Result<Self, FallbackError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| FallbackError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: config.effective_endpoint(),
            model: config.model.clone(),
            api_key: std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty()),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl ChatTransport for HttpChatTransport {
    fn complete(&self, prompt: &str) -> Result<String, FallbackError> {
        let body = ChatRequest { model: &self.model, messages: [ChatMessage { role: "user", content: prompt }] };
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| FallbackError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(FallbackError::Transport(format!("HTTP {status}: {text}")));
        }
        let parsed: ChatResponse = resp.json().map_err(|e| FallbackError::Transport(format!("bad reply body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| FallbackError::Transport("reply has no choices".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_placeholders() {
        let cfg = LlmBackendConfig::new("http://localhost", "m");
        let p = render_prompt(&cfg, &["English", "Amharic"], "Oromo").unwrap();
        assert!(p.starts_with("You are a linguist working on language classification"));
        assert!(p.contains("familiar with the given languages: English, Amharic."));
        assert!(p.contains("most similar to Oromo based on language family"));
        assert_eq!(p, render_prompt(&cfg, &["English", "Amharic"], "Oromo").unwrap());
    }

    #[test]
    fn empty_known_list_is_config_error() {
        let cfg = LlmBackendConfig::new("http://localhost", "m");
        assert!(matches!(render_prompt(&cfg, &[], "Oromo"), Err(FallbackError::Config(_))));
    }

    #[test]
    fn template_placeholders_checked() {
        let mut cfg = LlmBackendConfig::new("http://localhost", "m");
        cfg.prompt_template = "pick from {known_languages}".into();
        assert!(matches!(render_prompt(&cfg, &["English"], "Oromo"), Err(FallbackError::Config(_))));
        cfg.prompt_template = "{known_languages} {given_language} {given_language}".into();
        assert!(cfg.validate().is_err());
    }
}
