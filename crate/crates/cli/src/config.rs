//! Optional TOML configuration. Every key has a default and command-line
//! flags override the file:
//!
//! ```toml
//! store = "sessions"
//! model = "gpt-4"
//!
//! [gateway]
//! api_base = "https://api.openai.com/v1"
//! api_key_env = "OPENAI_API_KEY"
//! requests_per_minute = 60
//! max_in_flight = 4
//!
//! [defaults]
//! step3 = "cot"
//! step4 = "few-shot"
//! strategies = ["basic", "cot", "few-shot", "cot-few-shot"]
//! models = ["gpt-4"]
//! match_mode = "ordered-pair"
//! aggregation = "macro"
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use triz_core::eval::{Aggregation, MatchMode};
use triz_core::gateway::GatewayConfig;
use triz_core::prompts::PromptStrategy;

use crate::Usage;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub store: PathBuf,
    pub model: String,
    pub gateway: GatewayConfig,
    pub defaults: Defaults,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defaults {
    pub step3: Option<PromptStrategy>,
    pub step4: Option<PromptStrategy>,
    pub strategies: Vec<PromptStrategy>,
    pub models: Vec<String>,
    pub match_mode: MatchMode,
    pub aggregation: Aggregation,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self { store: "sessions".into(), model: "gpt-4".into(), gateway: GatewayConfig::default(), defaults: Defaults::default() }
    }
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            step3: None,
            step4: None,
            strategies: PromptStrategy::ALL.to_vec(),
            models: vec!["gpt-4".into()],
            match_mode: MatchMode::default(),
            aggregation: Aggregation::default(),
        }
    }
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = toml::from_str(&text).map_err(|e| Usage(format!("config {}: {e}", path.display())))?;
        Ok(config)
    }

    /// Problems that make the configuration unusable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let g = &self.gateway;
        if g.api_base.trim().is_empty() {
            out.push("gateway.api_base is empty".to_owned());
        }
        if g.max_in_flight == 0 {
            out.push("gateway.max_in_flight must be at least 1".to_owned());
        }
        if g.requests_per_minute == Some(0) {
            out.push("gateway.requests_per_minute must be at least 1".to_owned());
        }
        if g.timeout_secs == 0 {
            out.push("gateway.timeout_secs must be at least 1".to_owned());
        }
        if self.model.trim().is_empty() {
            out.push("model is empty".to_owned());
        }
        if self.defaults.strategies.is_empty() {
            out.push("defaults.strategies is empty".to_owned());
        }
        if self.defaults.models.is_empty() || self.defaults.models.iter().any(|m| m.trim().is_empty()) {
            out.push("defaults.models must list at least one non-empty model".to_owned());
        }
        out
    }
}
