use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use unicode_width::UnicodeWidthChar;

use super::template::placeholders;
use crate::games::{Flow, TemplateSlot, EMPTY_CELL};

/// A seat at the table. Flows decide what each seat does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    PlayerA,
    PlayerB,
    PlayerC,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::PlayerA => "player_a",
            Role::PlayerB => "player_b",
            Role::PlayerC => "player_c",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "player_a" => Ok(Role::PlayerA),
            "player_b" => Ok(Role::PlayerB),
            "player_c" => Ok(Role::PlayerC),
            other => Err(format!("unknown role '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    GameMaster,
    PlayerA,
    PlayerB,
    PlayerC,
}

impl From<Role> for Actor {
    fn from(role: Role) -> Self {
        match role {
            Role::PlayerA => Actor::PlayerA,
            Role::PlayerB => Actor::PlayerB,
            Role::PlayerC => Actor::PlayerC,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SendPrompt,
    ReceiveResponse,
    ParseOk,
    FormatViolation,
    RuleViolation,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub turn: u32,
    pub seq: u64,
    pub actor: Actor,
    pub kind: EventKind,
    pub content: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Loss,
    Aborted,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Success => "success",
            Outcome::Loss => "loss",
            Outcome::Aborted => "aborted",
        })
    }
}

/// Why an episode was aborted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortCause {
    FormatViolation,
    Backend,
    HumanTimeout,
}

/// Content of the single terminal event of a transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalRecord {
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_cause: Option<AbortCause>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Flow-specific facts needed for scoring (rounds used, choice, grids).
    #[serde(default)]
    pub summary: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMeta {
    pub game: String,
    pub experiment: String,
    pub instance_id: u64,
    pub players: BTreeMap<Role, String>,
    pub language: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
}

impl TranscriptMeta {
    /// Identifier of the player pairing: the distinct model ids in role
    /// order joined with `--`. Self-play collapses to the single model id.
    pub fn pairing(&self) -> String {
        pairing_id(self.players.values().map(String::as_str))
    }
}

pub fn pairing_id<'a>(models: impl IntoIterator<Item = &'a str>) -> String {
    let mut seen: Vec<&str> = Vec::new();
    for m in models {
        if !seen.contains(&m) {
            seen.push(m);
        }
    }
    seen.join("--")
}

/// Ordered event log of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub meta: TranscriptMeta,
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl Transcript {
    pub fn terminal(&self) -> Option<TerminalRecord> {
        self.events
            .iter()
            .rev()
            .find(|e| e.kind == EventKind::Terminal)
            .and_then(|e| serde_json::from_value(e.content.clone()).ok())
    }

    pub fn abort_cause(&self) -> Option<AbortCause> {
        self.terminal().and_then(|t| t.abort_cause)
    }

    /// Checks the structural invariants every transcript must satisfy.
    pub fn check_invariants(&self, max_turns: u32) -> Result<(), String> {
        let mut prev: Option<(u32, u64)> = None;
        for e in &self.events {
            if let Some(p) = prev {
                if (e.turn, e.seq) <= p {
                    return Err(format!("events out of order at seq {}", e.seq));
                }
            }
            prev = Some((e.turn, e.seq));
            if e.turn >= max_turns {
                return Err(format!("event at turn {} exceeds max_turns {}", e.turn, max_turns));
            }
        }
        let terminals = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Terminal)
            .count();
        if terminals != 1 || self.events.last().map(|e| e.kind) != Some(EventKind::Terminal) {
            return Err("transcript must end with exactly one terminal event".into());
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.kind == EventKind::ReceiveResponse {
                let next = self.events.get(i + 1).map(|n| n.kind);
                if !matches!(
                    next,
                    Some(EventKind::ParseOk) | Some(EventKind::FormatViolation)
                ) {
                    return Err(format!("response at seq {} not followed by a parse verdict", e.seq));
                }
            }
        }
        let first_violation = self
            .events
            .iter()
            .position(|e| e.kind == EventKind::FormatViolation);
        match first_violation {
            Some(i) => {
                if self.outcome != Outcome::Aborted {
                    return Err("format violation without abort".into());
                }
                if i + 2 != self.events.len() {
                    return Err("events continue after a format violation".into());
                }
            }
            None => {
                if self.outcome == Outcome::Aborted && self.abort_cause().is_none() {
                    return Err("aborted without a cause".into());
                }
                if self.outcome == Outcome::Aborted
                    && self.abort_cause() == Some(AbortCause::FormatViolation)
                {
                    return Err("format-violation abort without a violation event".into());
                }
            }
        }
        Ok(())
    }
}

/// Verdict of a parsing rule on one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParseResult {
    Accepted { payload: Value },
    FormatViolation { reason: String },
}

impl ParseResult {
    pub fn violation(reason: impl Into<String>) -> Self {
        ParseResult::FormatViolation {
            reason: reason.into(),
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, ParseResult::Accepted { .. })
    }
}

/// Per-episode parameters of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub game_name: String,
    pub experiment_name: String,
    pub instance_id: u64,
    pub params: BTreeMap<String, Value>,
}

/// Per-language templates and parser keywords of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalePack {
    pub language: String,
    pub initial_prompt_per_role: BTreeMap<Role, String>,
    #[serde(default)]
    pub turn_prompt_per_role: BTreeMap<Role, String>,
    /// Additional named templates for flows with more than two prompt
    /// shapes per role (e.g. the critic relay in `wordle_critic`).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra_prompts: BTreeMap<String, String>,
    pub parse_keywords: BTreeMap<String, String>,
    #[serde(default = "default_filled_cell")]
    pub filled_cell_char: char,
    /// Taboo only: forbid exact token matches instead of prefix matches.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exact_match_only: bool,
}

fn default_filled_cell() -> char {
    'X'
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("game '{0}' has no \"en\" locale pack")]
    MissingEnglishPack(String),
    #[error("game '{0}': max_turns must be at least 1")]
    ZeroTurns(String),
    #[error("game '{game}': roles {found:?} do not match flow roles {expected:?}")]
    RoleMismatch {
        game: String,
        expected: Vec<Role>,
        found: Vec<Role>,
    },
    #[error("locale '{language}': missing keyword '{keyword}'")]
    MissingKeyword { language: String, keyword: String },
    #[error("locale '{language}': keyword '{keyword}' is empty")]
    EmptyKeyword { language: String, keyword: String },
    #[error("locale '{language}': missing template {slot}")]
    MissingTemplate { language: String, slot: String },
    #[error("locale '{language}': template {slot} lacks placeholder ${placeholder}$")]
    MissingPlaceholder {
        language: String,
        slot: String,
        placeholder: String,
    },
    #[error("locale '{language}': filled cell '{ch}' must be a single-width character other than the empty cell")]
    BadFilledCell { language: String, ch: char },
    #[error("invalid game spec json: {0}")]
    Json(String),
}

impl LocalePack {
    pub fn keyword(&self, name: &str) -> &str {
        self.parse_keywords.get(name).map(String::as_str).unwrap_or("")
    }

    pub fn template(&self, slot: &TemplateSlot) -> Option<&str> {
        match slot {
            TemplateSlot::Initial(role) => self.initial_prompt_per_role.get(role),
            TemplateSlot::Turn(role) => self.turn_prompt_per_role.get(role),
            TemplateSlot::Extra(name) => self.extra_prompts.get(*name),
        }
        .map(String::as_str)
    }

    /// Keywords exposed to templates as `$UPPER_CASE$` params.
    pub fn keyword_params(&self) -> BTreeMap<String, String> {
        self.parse_keywords
            .iter()
            .map(|(k, v)| (k.to_ascii_uppercase(), v.clone()))
            .collect()
    }

    pub fn validate(&self, flow: Flow) -> Result<(), SpecError> {
        for &kw in flow.required_keywords() {
            match self.parse_keywords.get(kw) {
                None => {
                    return Err(SpecError::MissingKeyword {
                        language: self.language.clone(),
                        keyword: kw.into(),
                    })
                }
                Some(v) if v.trim().is_empty() => {
                    return Err(SpecError::EmptyKeyword {
                        language: self.language.clone(),
                        keyword: kw.into(),
                    })
                }
                Some(_) => {}
            }
        }
        for (k, v) in &self.parse_keywords {
            if v.trim().is_empty() {
                return Err(SpecError::EmptyKeyword {
                    language: self.language.clone(),
                    keyword: k.clone(),
                });
            }
        }
        if self.filled_cell_char == EMPTY_CELL
            || self.filled_cell_char.is_whitespace()
            || self.filled_cell_char.width() != Some(1)
        {
            return Err(SpecError::BadFilledCell {
                language: self.language.clone(),
                ch: self.filled_cell_char,
            });
        }
        for (slot, required) in flow.required_placeholders() {
            let Some(template) = self.template(&slot) else {
                return Err(SpecError::MissingTemplate {
                    language: self.language.clone(),
                    slot: slot.to_string(),
                });
            };
            let present = placeholders(template);
            for name in required {
                if !present.iter().any(|p| p == name) {
                    return Err(SpecError::MissingPlaceholder {
                        language: self.language.clone(),
                        slot: slot.to_string(),
                        placeholder: name.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Declarative definition of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub game_name: String,
    pub roles: Vec<Role>,
    pub max_turns: u32,
    pub flow: Flow,
    pub locale_packs: BTreeMap<String, LocalePack>,
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let spec: GameSpec =
            serde_json::from_str(text).map_err(|e| SpecError::Json(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// The shipped definition of `flow` with its English pack.
    pub fn builtin(flow: Flow) -> Self {
        Self::from_json(flow.builtin_spec_json())
            .unwrap_or_else(|e| panic!("shipped spec for {flow} is invalid: {e}"))
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !self.locale_packs.contains_key("en") {
            return Err(SpecError::MissingEnglishPack(self.game_name.clone()));
        }
        if self.max_turns == 0 {
            return Err(SpecError::ZeroTurns(self.game_name.clone()));
        }
        if self.roles != self.flow.roles() {
            return Err(SpecError::RoleMismatch {
                game: self.game_name.clone(),
                expected: self.flow.roles().to_vec(),
                found: self.roles.clone(),
            });
        }
        for pack in self.locale_packs.values() {
            pack.validate(self.flow)?;
        }
        Ok(())
    }

    /// Adds or replaces a locale pack after validating it against the flow.
    pub fn add_locale_pack(&mut self, pack: LocalePack) -> Result<(), SpecError> {
        pack.validate(self.flow)?;
        self.locale_packs.insert(pack.language.clone(), pack);
        Ok(())
    }

    /// The pack for `language`, falling back to English. The flag reports
    /// whether the fallback was taken.
    pub fn pack(&self, language: &str) -> (&LocalePack, bool) {
        match self.locale_packs.get(language) {
            Some(p) => (p, false),
            None => (&self.locale_packs["en"], true),
        }
    }
}
