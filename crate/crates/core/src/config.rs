//! Engine configuration file (JSON). Every field is optional; missing ones
//! take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::EncoderParams;
use crate::keyframe::ExtractorParams;
use crate::reasoner::LlmConfig;
use crate::registry::RegistryParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub extractor: ExtractorParams,
    pub encoder: EncoderParams,
    pub registry: RegistryParams,
    /// Seconds without a keyframe after which a gesture is closed.
    pub gesture_timeout: f64,
    /// Exemplars retrieved from memory per prompt.
    pub memory_k: usize,
    pub embedding_dim: usize,
    /// Timeout for robot HTTP calls, seconds.
    pub dispatch_timeout: f64,
    /// Poll every robot's `/state` once per gesture before interpretation.
    pub poll_state: bool,
    pub llm: LlmConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            extractor: ExtractorParams::default(),
            encoder: EncoderParams::default(),
            registry: RegistryParams::default(),
            gesture_timeout: 1.0,
            memory_k: 3,
            embedding_dim: crate::memory::DEFAULT_DIMENSION,
            dispatch_timeout: 5.0,
            poll_state: true,
            llm: LlmConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(String, std::io::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl EngineConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: Self = serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if !(self.gesture_timeout > 0.0) {
            return bad("gesture_timeout must be positive");
        }
        if self.memory_k == 0 {
            return bad("memory_k must be at least 1");
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be positive");
        }
        if !(self.dispatch_timeout > 0.0) {
            return bad("dispatch_timeout must be positive");
        }
        self.registry
            .weights
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}
