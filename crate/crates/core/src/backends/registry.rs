//! Model registry: ids mapped to how the player is realized.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::{BackendKind, ModelSpec};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    models: BTreeMap<String, ModelSpec>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read registry {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed registry: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid registry entry: {0}")]
    Invalid(String),
    #[error("model '{0}' is listed twice")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown model '{model_id}'{}", suggestion_text(.suggestions))]
pub struct UnresolvableModel {
    pub model_id: String,
    pub suggestions: Vec<String>,
}

fn suggestion_text(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!("; did you mean {}?", suggestions.join(", "))
    }
}

impl Registry {
    /// Parses a JSON list of model specs.
    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let specs: Vec<ModelSpec> = serde_json::from_str(text)?;
        let mut reg = Registry::default();
        for spec in specs {
            spec.validate().map_err(RegistryError::Invalid)?;
            if reg.models.contains_key(&spec.model_id) {
                return Err(RegistryError::Duplicate(spec.model_id));
            }
            reg.models.insert(spec.model_id.clone(), spec);
        }
        Ok(reg)
    }

    /// Adds or replaces an entry.
    pub fn insert(&mut self, spec: ModelSpec) {
        self.models.insert(spec.model_id.clone(), spec);
    }

    pub fn get(&self, model_id: &str) -> Option<&ModelSpec> {
        self.models.get(model_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

fn strategy(id: &str, strategy: &str) -> ModelSpec {
    ModelSpec {
        strategy: Some(strategy.into()),
        ..ModelSpec::new(id, BackendKind::Scripted)
    }
}

/// Bots and the human seat that need no configuration.
pub fn builtin_registry() -> Registry {
    let mut reg = Registry::default();
    reg.insert(strategy("scripted:perfect", "perfect"));
    for game in ["reference", "wordle", "taboo", "drawing"] {
        reg.insert(strategy(&format!("scripted:perfect_{game}"), "perfect"));
    }
    reg.insert(strategy("scripted:random_reference", "random"));
    reg.insert(ModelSpec::new("oracle:wordle", BackendKind::Oracle));
    reg.insert(ModelSpec::new("human", BackendKind::Human));
    reg
}

/// The built-in entries overlaid with the entries of the file at `path`.
pub fn load_registry(path: &Path) -> Result<Registry, RegistryError> {
    let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = Registry::from_json(&text)?;
    let mut reg = builtin_registry();
    for spec in file.models.into_values() {
        reg.insert(spec);
    }
    Ok(reg)
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Exact-match lookup. Unknown ids report near matches: small edit
/// distance, or equal/contained ids once punctuation and case are dropped.
pub fn resolve_model(model_id: &str, registry: &Registry) -> Result<ModelSpec, UnresolvableModel> {
    if let Some(spec) = registry.get(model_id) {
        return Ok(spec.clone());
    }
    let wanted = squash(model_id);
    let suggestions = registry
        .ids()
        .filter(|known| {
            let k = squash(known);
            strsim::levenshtein(model_id, known) <= 3
                || (!wanted.is_empty() && (k.contains(&wanted) || wanted.contains(&k)))
        })
        .map(String::from)
        .collect();
    Err(UnresolvableModel {
        model_id: model_id.to_string(),
        suggestions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = r#"[
        {"model_id": "gpt-4-turbo-2024-04-09", "backend_kind": "remote_chat",
         "endpoint_url": "https://api.example.com/v1/chat/completions",
         "auth_env_var": "EXAMPLE_API_KEY"}
    ]"#;

    #[test]
    fn builtin_perfect_alias() {
        let spec = resolve_model("scripted:perfect_reference", &builtin_registry()).unwrap();
        assert_eq!(spec.backend_kind, BackendKind::Scripted);
        assert_eq!(spec.strategy.as_deref(), Some("perfect"));
    }

    #[test]
    fn remote_entry_keeps_endpoint() {
        let reg = Registry::from_json(FILE).unwrap();
        let spec = resolve_model("gpt-4-turbo-2024-04-09", &reg).unwrap();
        assert_eq!(spec.backend_kind, BackendKind::RemoteChat);
        assert_eq!(
            spec.endpoint_url.as_deref(),
            Some("https://api.example.com/v1/chat/completions")
        );
        assert_eq!(spec.gen_params.temperature, 0.0);
        assert_eq!(spec.gen_params.max_response_tokens, 300);
    }

    #[test]
    fn near_miss_is_suggested() {
        let reg = Registry::from_json(FILE).unwrap();
        let err = resolve_model("gpt4turbo", &reg).unwrap_err();
        assert_eq!(err.suggestions, vec!["gpt-4-turbo-2024-04-09"]);
        assert!(err.to_string().contains("did you mean"));
        let err = resolve_model("gpt-x", &reg).unwrap_err();
        assert!(err.suggestions.is_empty());
    }

    #[test]
    fn invalid_entries_rejected() {
        let bad = r#"[{"model_id": "r", "backend_kind": "remote_chat"}]"#;
        assert!(matches!(Registry::from_json(bad), Err(RegistryError::Invalid(_))));
        let dup = r#"[{"model_id": "h", "backend_kind": "human"}, {"model_id": "h", "backend_kind": "human"}]"#;
        assert!(matches!(Registry::from_json(dup), Err(RegistryError::Duplicate(_))));
    }
}
