//! Settings resolution: command-line flags override environment variables,
//! which override the optional TOML config file.
//!
//! Credentials are never accepted as flags. The API key comes from
//! `PHISHTRIAGE_API_KEY` or from `api_key` in the config file, so it cannot
//! leak through shell history or the process list.

use anyhow::{bail, Context, Result};
use clap::Args;
use phishtriage_core::{Credential, ModelConfig};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::time::Duration;
use std::{env, fs};

pub const ENV_API_KEY: &str = "PHISHTRIAGE_API_KEY";
pub const ENV_BASE_URL: &str = "PHISHTRIAGE_BASE_URL";
pub const ENV_REPUTATION_KEY: &str = "PHISHTRIAGE_REPUTATION_KEY";

/// Contents of the optional `--config` TOML file. Unknown keys are rejected
/// so a typo fails loudly instead of being ignored.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSettings {
    pub api_key: Option<String>,
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub rate_limit: Option<u32>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub max_input_chars: Option<usize>,
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub whitelist: Option<Vec<String>>,
    pub reputation_url: Option<String>,
    pub reputation_key: Option<String>,
}

#[derive(Debug, Default)]
pub struct Settings {
    pub file: FileSettings,
}

/// Model endpoint flags shared by the verbs that talk to a model.
#[derive(Debug, Default, Args)]
pub struct ModelFlags {
    /// Model name sent to the endpoint.
    #[arg(long, value_name = "NAME")]
    pub model: Option<String>,
    /// Endpoint base URL (an OpenAI-style /v1/chat/completions server).
    #[arg(long, value_name = "URL")]
    pub base_url: Option<String>,
    /// Sampling temperature, 0 to 2.
    #[arg(long, value_name = "T")]
    pub temperature: Option<f64>,
    /// Completion token budget per request.
    #[arg(long, value_name = "N")]
    pub max_output_tokens: Option<u32>,
    /// Request budget per minute.
    #[arg(long, value_name = "N")]
    pub rate_limit: Option<u32>,
    /// Per-request timeout in seconds.
    #[arg(long, value_name = "SECS")]
    pub timeout_secs: Option<f64>,
    /// Retries per record before recording a failure.
    #[arg(long, value_name = "N")]
    pub max_retries: Option<u32>,
    /// Base backoff between retries, in milliseconds.
    #[arg(long, value_name = "MS")]
    pub backoff_ms: Option<u64>,
    /// Truncate prompts beyond this many characters.
    #[arg(long, value_name = "N")]
    pub max_input_chars: Option<usize>,
    /// Seed forwarded to the endpoint for reproducible sampling.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))?
            }
            None => FileSettings::default(),
        };
        Ok(Settings { file })
    }

    /// Resolves the model endpoint configuration from flags, environment,
    /// and config file, in that order of precedence.
    pub fn model_config(&self, flags: &ModelFlags) -> Result<ModelConfig> {
        let Some(name) = flags.model.clone().or_else(|| self.file.model.clone()) else {
            bail!("no model name: pass --model or set `model` in the config file");
        };
        let base_url = flags
            .base_url
            .clone()
            .or_else(|| nonempty_env(ENV_BASE_URL))
            .or_else(|| self.file.base_url.clone());
        let Some(base_url) = base_url else {
            bail!(
                "no endpoint: pass --base-url, set {ENV_BASE_URL}, \
                 or set `base_url` in the config file"
            );
        };

        let mut cfg = ModelConfig::new(name, base_url);
        cfg.credential = if nonempty_env(ENV_API_KEY).is_some() {
            Credential::FromEnv(ENV_API_KEY.to_string())
        } else if let Some(key) = self.file.api_key.clone() {
            Credential::Inline(key)
        } else {
            Credential::None
        };
        if let Some(t) = flags.temperature.or(self.file.temperature) {
            cfg.temperature = t;
        }
        if let Some(n) = flags.max_output_tokens.or(self.file.max_output_tokens) {
            cfg.max_output_tokens = n;
        }
        if let Some(n) = flags.rate_limit.or(self.file.rate_limit) {
            cfg.rate_limit = n;
        }
        if let Some(secs) = flags.timeout_secs.or(self.file.timeout_secs) {
            if !secs.is_finite() || secs <= 0.0 {
                bail!("timeout_secs must be a positive number");
            }
            cfg.timeout = Duration::from_secs_f64(secs);
        }
        if let Some(n) = flags.max_retries.or(self.file.max_retries) {
            cfg.max_retries = n;
        }
        if let Some(ms) = flags.backoff_ms.or(self.file.backoff_ms) {
            cfg.backoff = Duration::from_millis(ms);
        }
        if let Some(n) = flags.max_input_chars.or(self.file.max_input_chars) {
            cfg.max_input_chars = Some(n);
        }
        if let Some(s) = flags.seed.or(self.file.seed) {
            cfg.seed = Some(s);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn reputation_key(&self) -> Option<String> {
        nonempty_env(ENV_REPUTATION_KEY).or_else(|| self.file.reputation_key.clone())
    }
}

fn nonempty_env(name: &str) -> Option<String> {
    env::var(name).ok().filter(|v| !v.is_empty())
}
