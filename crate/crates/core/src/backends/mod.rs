//! Player realizations: remote chat-completion endpoints, scripted and
//! oracle bots, and the human bridge.
//!
//! Every player is seen by the game master through the [`Player`] trait: it
//! receives its own message history and returns the next response text.

mod bots;
mod human;
mod oracle;
mod registry;
mod remote;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{GameInstance, LocalePack, Role};
use crate::games::{Flow, WordPool};

pub use bots::{PerfectPlayer, RandomReferencePlayer, ScriptedPlayer};
pub use human::{HumanBridge, HumanPlayer, HumanPrompt, SubmitError, HUMAN_TIMEOUT};
pub use oracle::{observed_feedback, oracle_candidates, oracle_wordle, EmptyCandidateSet, OraclePlayer};
pub use registry::{builtin_registry, load_registry, resolve_model, Registry, RegistryError, UnresolvableModel};
pub use remote::{extract_path, RemoteClient, RemotePlayer, RetryPolicy, DEFAULT_RESPONSE_PATH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: MessageRole,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: MessageRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: MessageRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message {
            role: MessageRole::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    RemoteChat,
    Scripted,
    Oracle,
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_response_tokens: u32,
}

fn default_max_tokens() -> u32 {
    300
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            temperature: 0.0,
            max_response_tokens: default_max_tokens(),
        }
    }
}

/// One entry of the model registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: String,
    pub backend_kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env_var: Option<String>,
    #[serde(default)]
    pub gen_params: GenParams,
    /// Model name sent on the wire; defaults to `model_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_model: Option<String>,
    /// JSON path of the assistant text in the reply body.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_minute: Option<u32>,
    /// Scripted players: responses replayed in order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<Vec<String>>,
    /// Scripted players: name of a built-in strategy (`perfect`, `random`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    /// Oracle players: candidate word pool file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<PathBuf>,
}

impl ModelSpec {
    pub fn new(model_id: impl Into<String>, backend_kind: BackendKind) -> Self {
        ModelSpec {
            model_id: model_id.into(),
            backend_kind,
            endpoint_url: None,
            auth_env_var: None,
            gen_params: GenParams::default(),
            api_model: None,
            response_path: None,
            requests_per_minute: None,
            script: None,
            strategy: None,
            pool: None,
        }
    }

    pub fn scripted(model_id: impl Into<String>, script: Vec<String>) -> Self {
        ModelSpec {
            script: Some(script),
            ..ModelSpec::new(model_id, BackendKind::Scripted)
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.backend_kind == BackendKind::RemoteChat
            && (self.endpoint_url.is_none() || self.auth_env_var.is_none())
        {
            return Err(format!(
                "remote model '{}' needs endpoint_url and auth_env_var",
                self.model_id
            ));
        }
        if self.gen_params.temperature.is_nan() || self.gen_params.temperature < 0.0 {
            return Err(format!("model '{}' has a negative temperature", self.model_id));
        }
        if self.backend_kind == BackendKind::Scripted
            && self.script.is_none()
            && self.strategy.is_none()
        {
            return Err(format!(
                "scripted model '{}' needs a script or a strategy",
                self.model_id
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendErrorKind {
    Auth,
    RateLimitExhausted,
    ServerUnavailable,
    Timeout,
    MalformedReply,
    ScriptExhausted,
    EmptyCandidateSet,
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?}: {message}")]
pub struct BackendError {
    pub kind: BackendErrorKind,
    pub message: String,
}

impl BackendError {
    pub fn new(kind: BackendErrorKind, message: impl Into<String>) -> Self {
        BackendError {
            kind,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlayerError {
    #[error("backend error: {0}")]
    Backend(#[from] BackendError),
    #[error("no human response before the inactivity timeout")]
    HumanTimeout,
}

/// A participant in an episode.
pub trait Player: Send {
    fn model_id(&self) -> &str;

    /// Returns the next response given this player's own message history,
    /// whose last entry is the prompt to answer.
    fn respond(&mut self, history: &[Message]) -> Result<String, PlayerError>;
}

/// What a player needs to know about the episode it is seated in.
///
/// Only bots use it; remote and human players see nothing but prompts.
#[derive(Debug, Clone, Copy)]
pub struct PlayerContext<'a> {
    pub flow: Flow,
    pub role: Role,
    pub instance: &'a GameInstance,
    pub pack: &'a LocalePack,
    pub seed: u64,
}

/// Registry plus the shared state players draw on (HTTP clients, pools).
pub struct Backends {
    registry: Registry,
    clients: Mutex<BTreeMap<String, Arc<RemoteClient>>>,
    retry: RetryPolicy,
}

impl fmt::Debug for Backends {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Backends")
            .field("models", &self.registry.len())
            .finish()
    }
}

impl Backends {
    pub fn new(registry: Registry) -> Self {
        Backends {
            registry,
            clients: Mutex::new(BTreeMap::new()),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn resolve(&self, model_id: &str) -> Result<ModelSpec, UnresolvableModel> {
        resolve_model(model_id, &self.registry)
    }

    fn client_for(&self, spec: &ModelSpec) -> Result<Arc<RemoteClient>, BackendError> {
        let url = spec.endpoint_url.clone().unwrap_or_default();
        let mut clients = self.clients.lock().expect("client map poisoned");
        if let Some(c) = clients.get(&url) {
            return Ok(c.clone());
        }
        let client = Arc::new(RemoteClient::new(
            self.retry.clone(),
            spec.requests_per_minute,
        )?);
        clients.insert(url, client.clone());
        Ok(client)
    }

    /// Builds the player for `spec` seated according to `ctx`.
    pub fn player(
        &self,
        spec: &ModelSpec,
        ctx: &PlayerContext<'_>,
    ) -> Result<Box<dyn Player>, BackendError> {
        match spec.backend_kind {
            BackendKind::RemoteChat => {
                let client = self.client_for(spec)?;
                Ok(Box::new(RemotePlayer::new(spec.clone(), client)?))
            }
            BackendKind::Scripted => match (&spec.script, spec.strategy.as_deref()) {
                (Some(script), _) => Ok(Box::new(ScriptedPlayer::new(
                    spec.model_id.clone(),
                    script.clone(),
                ))),
                (None, Some("perfect")) => {
                    Ok(Box::new(PerfectPlayer::new(spec.model_id.clone(), ctx)?))
                }
                (None, Some("random")) => Ok(Box::new(RandomReferencePlayer::new(
                    spec.model_id.clone(),
                    ctx,
                )?)),
                (None, other) => Err(BackendError::new(
                    BackendErrorKind::Unsupported,
                    format!("unknown scripted strategy {other:?}"),
                )),
            },
            BackendKind::Oracle => {
                let pool = match &spec.pool {
                    Some(path) => WordPool::from_file(path).map_err(|e| {
                        BackendError::new(BackendErrorKind::Unsupported, e.to_string())
                    })?,
                    None => WordPool::builtin(Flow::Wordle),
                };
                Ok(Box::new(OraclePlayer::new(spec.model_id.clone(), ctx, pool)?))
            }
            BackendKind::Human => Err(BackendError::new(
                BackendErrorKind::Unsupported,
                "human players join through the session service",
            )),
        }
    }

    /// One-shot generation for `spec` outside of an episode. Bots that need
    /// an episode context are not supported here.
    pub fn generate(&self, spec: &ModelSpec, history: &[Message]) -> Result<String, BackendError> {
        match spec.backend_kind {
            BackendKind::RemoteChat => {
                let client = self.client_for(spec)?;
                client.generate(spec, history)
            }
            BackendKind::Scripted if spec.script.is_some() => {
                ScriptedPlayer::new(spec.model_id.clone(), spec.script.clone().unwrap())
                    .reply(history)
            }
            _ => Err(BackendError::new(
                BackendErrorKind::Unsupported,
                format!("'{}' can only play inside an episode", spec.model_id),
            )),
        }
    }
}
