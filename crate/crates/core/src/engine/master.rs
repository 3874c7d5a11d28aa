use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{json, Value};

use super::template::{instantiate_prompt, TemplateError};
use super::types::{
    AbortCause, Actor, Event, EventKind, GameInstance, GameSpec, LocalePack, Outcome, ParseResult,
    Role, TerminalRecord, Transcript, TranscriptMeta,
};
use super::EngineError;
use crate::backends::{Message, Player, PlayerError};
use crate::games::{self, TemplateSlot};

/// Source of transcript timestamps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Clock {
    #[default]
    System,
    /// Every timestamp is this instant; used for reproducible output.
    Fixed(DateTime<Utc>),
}

impl Clock {
    /// `Fixed` at `SOURCE_DATE_EPOCH` when that variable holds a unix
    /// timestamp, `System` otherwise.
    pub fn from_env() -> Self {
        std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.trim().parse::<i64>().ok())
            .and_then(|secs| DateTime::from_timestamp(secs, 0))
            .map(Clock::Fixed)
            .unwrap_or(Clock::System)
    }

    pub fn now(&self) -> String {
        let t = match self {
            Clock::System => Utc::now(),
            Clock::Fixed(t) => *t,
        };
        t.to_rfc3339_opts(SecondsFormat::Millis, true)
    }
}

/// Why a flow stopped before reaching a win or loss.
#[derive(Debug)]
pub enum Halt {
    FormatViolation { role: Role, reason: String },
    Player { role: Role, error: PlayerError },
    Template(TemplateError),
}

/// Regular end of a flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Finish {
    pub outcome: Outcome,
    pub reason: Option<String>,
    pub summary: Value,
}

impl Finish {
    pub fn success(summary: Value) -> Self {
        Finish {
            outcome: Outcome::Success,
            reason: None,
            summary,
        }
    }

    pub fn loss(reason: impl Into<String>, summary: Value) -> Self {
        Finish {
            outcome: Outcome::Loss,
            reason: Some(reason.into()),
            summary,
        }
    }
}

/// Read-only view of the episode a flow is playing.
pub struct FlowContext<'a> {
    pub spec: &'a GameSpec,
    pub pack: &'a LocalePack,
    pub instance: &'a GameInstance,
}

impl FlowContext<'_> {
    pub fn max_turns(&self) -> u32 {
        self.spec.max_turns
    }

    /// Renders a template slot with the pack's keywords plus `params`.
    pub fn render(&self, slot: TemplateSlot, params: &[(&str, String)]) -> Result<String, Halt> {
        let template = self.pack.template(&slot).ok_or_else(|| {
            Halt::Template(TemplateError::MissingParam(format!("<template {slot}>")))
        })?;
        let mut bound = self.pack.keyword_params();
        let filled = self.pack.filled_cell_char;
        bound.insert("FILLED_CELL".into(), filled.to_string());
        bound.insert("EMPTY_CELL".into(), games::EMPTY_CELL.to_string());
        bound.insert("EMPTY_GRID".into(), games::PixelGrid::empty().render(filled));
        for (k, v) in params {
            bound.insert((*k).to_string(), v.clone());
        }
        instantiate_prompt(template, &bound).map_err(Halt::Template)
    }
}

/// Relays prompts to players and records every step as an event.
pub struct GameMaster<'p> {
    players: &'p mut BTreeMap<Role, Box<dyn Player>>,
    histories: BTreeMap<Role, Vec<Message>>,
    events: Vec<Event>,
    turn: u32,
    observer: Option<&'p mut dyn FnMut(&Event)>,
}

impl<'p> GameMaster<'p> {
    fn new(
        players: &'p mut BTreeMap<Role, Box<dyn Player>>,
        observer: Option<&'p mut dyn FnMut(&Event)>,
    ) -> Self {
        GameMaster {
            players,
            histories: BTreeMap::new(),
            events: Vec::new(),
            turn: 0,
            observer,
        }
    }

    pub fn turn(&self) -> u32 {
        self.turn
    }

    pub fn set_turn(&mut self, turn: u32) {
        debug_assert!(turn >= self.turn);
        self.turn = turn;
    }

    fn push(&mut self, actor: Actor, kind: EventKind, content: Value) {
        let event = Event {
            turn: self.turn,
            seq: self.events.len() as u64,
            actor,
            kind,
            content,
        };
        if let Some(observer) = self.observer.as_mut() {
            observer(&event);
        }
        self.events.push(event);
    }

    /// Sends `prompt` to `role` and returns the raw response.
    pub fn ask(&mut self, role: Role, prompt: String) -> Result<String, Halt> {
        self.push(Actor::GameMaster, EventKind::SendPrompt, json!({ "to": role, "text": prompt }));
        let history = self.histories.entry(role).or_default();
        history.push(Message::user(prompt));
        let player = self
            .players
            .get_mut(&role)
            .expect("players are checked before the episode starts");
        let reply = player.respond(history);
        match reply {
            Ok(text) => {
                history.push(Message::assistant(text.clone()));
                self.push(role.into(), EventKind::ReceiveResponse, Value::String(text.clone()));
                Ok(text)
            }
            Err(error) => Err(Halt::Player { role, error }),
        }
    }

    /// Records the verdict on the last response. A violation halts the flow.
    pub fn check(&mut self, role: Role, verdict: ParseResult) -> Result<Value, Halt> {
        match verdict {
            ParseResult::Accepted { payload } => {
                self.push(Actor::GameMaster, EventKind::ParseOk, payload.clone());
                Ok(payload)
            }
            ParseResult::FormatViolation { reason } => Err(self.reject(role, reason)),
        }
    }

    /// Records a format violation by `role`; the caller must stop the flow
    /// with the returned halt.
    pub fn reject(&mut self, role: Role, reason: String) -> Halt {
        self.push(
            Actor::GameMaster,
            EventKind::FormatViolation,
            json!({ "role": role, "reason": reason }),
        );
        Halt::FormatViolation { role, reason }
    }

    pub fn rule_violation(&mut self, role: Role, reason: &str) {
        self.push(
            Actor::GameMaster,
            EventKind::RuleViolation,
            json!({ "role": role, "reason": reason }),
        );
    }
}

/// Plays one episode and returns its transcript.
///
/// Backend failures end the episode as `Aborted` with cause `backend`; they
/// are not errors of this function. Errors are reserved for setups that
/// cannot be played at all.
pub fn play_episode(
    spec: &GameSpec,
    instance: &GameInstance,
    players: &mut BTreeMap<Role, Box<dyn Player>>,
    language: &str,
    seed: u64,
    clock: &Clock,
) -> Result<Transcript, EngineError> {
    play_episode_observed(spec, instance, players, language, seed, clock, None)
}

/// [`play_episode`] with a callback invoked on every event as it happens.
pub fn play_episode_observed<'a>(
    spec: &GameSpec,
    instance: &GameInstance,
    players: &'a mut BTreeMap<Role, Box<dyn Player>>,
    language: &str,
    seed: u64,
    clock: &Clock,
    observer: Option<&'a mut dyn FnMut(&Event)>,
) -> Result<Transcript, EngineError> {
    if instance.game_name != spec.game_name {
        return Err(EngineError::WrongGame {
            expected: spec.game_name.clone(),
            found: instance.game_name.clone(),
        });
    }
    for role in &spec.roles {
        if !players.contains_key(role) {
            return Err(EngineError::MissingPlayer(*role));
        }
    }
    games::check_instance(spec.flow, instance).map_err(EngineError::InvalidInstance)?;
    let (pack, fell_back) = spec.pack(language);
    if fell_back {
        log::warn!(
            "no '{}' locale pack for {}; playing in English",
            language,
            spec.game_name
        );
    }
    let meta_players = spec
        .roles
        .iter()
        .map(|r| (*r, players[r].model_id().to_string()))
        .collect();
    let started_at = clock.now();

    let ctx = FlowContext {
        spec,
        pack,
        instance,
    };
    let mut gm = GameMaster::new(players, observer);
    let result = games::run_flow(spec.flow, &mut gm, &ctx);

    let terminal = match result {
        Ok(finish) => TerminalRecord {
            outcome: finish.outcome,
            abort_cause: None,
            reason: finish.reason,
            summary: finish.summary,
        },
        Err(Halt::FormatViolation { role, reason }) => TerminalRecord {
            outcome: Outcome::Aborted,
            abort_cause: Some(AbortCause::FormatViolation),
            reason: Some(format!("{role}: {reason}")),
            summary: Value::Null,
        },
        Err(Halt::Player { role, error }) => TerminalRecord {
            outcome: Outcome::Aborted,
            abort_cause: Some(match error {
                PlayerError::HumanTimeout => AbortCause::HumanTimeout,
                PlayerError::Backend(_) => AbortCause::Backend,
            }),
            reason: Some(format!("{role}: {error}")),
            summary: Value::Null,
        },
        Err(Halt::Template(e)) => return Err(EngineError::Template(e)),
    };
    let outcome = terminal.outcome;
    gm.push(
        Actor::GameMaster,
        EventKind::Terminal,
        serde_json::to_value(&terminal).expect("terminal record serializes"),
    );

    Ok(Transcript {
        meta: TranscriptMeta {
            game: spec.game_name.clone(),
            experiment: instance.experiment_name.clone(),
            instance_id: instance.instance_id,
            players: meta_players,
            language: pack.language.clone(),
            seed,
            started_at,
            finished_at: clock.now(),
        },
        events: gm.events,
        outcome,
    })
}
