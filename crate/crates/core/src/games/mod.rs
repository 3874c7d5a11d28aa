//! Concrete game flows with their parsers, rule checks, instance generators
//! and episode scorers.

mod drawing;
mod grid;
mod instances;
mod pool;
mod reference;
mod taboo;
mod text;
mod wordle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Finish, FlowContext, GameInstance, GameMaster, Halt, LocalePack, Outcome, ParseResult, Role, Transcript};

pub use drawing::{drawing_turn_state, DrawingInstance, DrawingSummary};
pub use grid::{f1_score, PixelGrid, EMPTY_CELL};
pub use instances::{generate_instances, GenerateError, InstanceFile, InstanceFileError};
pub use pool::{PoolEntry, WordPool};
pub use reference::{reference_parse_answer, ReferenceInstance, ReferenceSummary};
pub use taboo::{taboo_judge_clue, ClueVerdict, TabooInstance};
pub use text::{find_prefixed, normalize_token};
pub use wordle::{
    oracle_consistent, parse_feedback_line, render_feedback, wordle_feedback, FeedbackError, Mark,
    WordleFeedback, WordleInstance,
};

/// Which game logic drives an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    Taboo,
    Wordle,
    WordleClue,
    WordleCritic,
    Reference,
    Drawing,
}

/// Addresses one template of a locale pack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateSlot {
    Initial(Role),
    Turn(Role),
    Extra(&'static str),
}

impl fmt::Display for TemplateSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateSlot::Initial(r) => write!(f, "initial[{r}]"),
            TemplateSlot::Turn(r) => write!(f, "turn[{r}]"),
            TemplateSlot::Extra(name) => write!(f, "extra[{name}]"),
        }
    }
}

impl Flow {
    pub const ALL: [Flow; 6] = [
        Flow::Taboo,
        Flow::Wordle,
        Flow::WordleClue,
        Flow::WordleCritic,
        Flow::Reference,
        Flow::Drawing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Flow::Taboo => "taboo",
            Flow::Wordle => "wordle",
            Flow::WordleClue => "wordle_clue",
            Flow::WordleCritic => "wordle_critic",
            Flow::Reference => "reference",
            Flow::Drawing => "drawing",
        }
    }

    pub fn roles(self) -> &'static [Role] {
        match self {
            Flow::Wordle | Flow::WordleClue => &[Role::PlayerA],
            _ => &[Role::PlayerA, Role::PlayerB],
        }
    }

    pub fn is_wordle(self) -> bool {
        matches!(self, Flow::Wordle | Flow::WordleClue | Flow::WordleCritic)
    }

    pub fn uses_word_pool(self) -> bool {
        self.is_wordle() || self == Flow::Taboo
    }

    pub fn required_keywords(self) -> &'static [&'static str] {
        match self {
            Flow::Taboo => &["clue_prefix", "guess_prefix"],
            Flow::Wordle | Flow::WordleClue => {
                &["guess_prefix", "fb_correct", "fb_present", "fb_absent"]
            }
            Flow::WordleCritic => &[
                "guess_prefix",
                "fb_correct",
                "fb_present",
                "fb_absent",
                "agreement_prefix",
                "agreement_yes",
                "agreement_no",
                "explanation_prefix",
            ],
            Flow::Reference => &[
                "expression_prefix",
                "answer_prefix",
                "ordinal_1",
                "ordinal_2",
                "ordinal_3",
            ],
            Flow::Drawing => &["instruction_prefix", "done_token"],
        }
    }

    /// Placeholders each template must contain for the flow to bind its data.
    pub fn required_placeholders(self) -> Vec<(TemplateSlot, Vec<&'static str>)> {
        use Role::*;
        use TemplateSlot::*;
        match self {
            Flow::Taboo => vec![
                (Initial(PlayerA), vec!["TARGET_WORD", "REL_WORDS"]),
                (Turn(PlayerA), vec!["GUESS"]),
                (Initial(PlayerB), vec!["CLUE"]),
                (Turn(PlayerB), vec!["CLUE"]),
            ],
            Flow::Wordle => vec![(Initial(PlayerA), vec![]), (Turn(PlayerA), vec!["FEEDBACK"])],
            Flow::WordleClue => vec![
                (Initial(PlayerA), vec!["CLUE"]),
                (Turn(PlayerA), vec!["FEEDBACK"]),
            ],
            Flow::WordleCritic => vec![
                (Initial(PlayerA), vec!["CLUE"]),
                (Turn(PlayerA), vec!["FEEDBACK"]),
                (Extra("critic_relay"), vec!["CRITIC_RESPONSE"]),
                (Initial(PlayerB), vec!["CLUE", "GUESS"]),
                (Turn(PlayerB), vec!["GUESS"]),
            ],
            Flow::Reference => vec![
                (Initial(PlayerA), vec!["GRID1", "GRID2", "GRID3"]),
                (Initial(PlayerB), vec!["GRID1", "GRID2", "GRID3", "EXPRESSION"]),
            ],
            Flow::Drawing => vec![
                (Initial(PlayerA), vec!["TARGET_GRID"]),
                (Turn(PlayerA), vec![]),
                (Initial(PlayerB), vec!["INSTRUCTION"]),
                (Turn(PlayerB), vec!["INSTRUCTION"]),
            ],
        }
    }

    pub(crate) fn builtin_spec_json(self) -> &'static str {
        match self {
            Flow::Taboo => include_str!("../../resources/games/taboo.json"),
            Flow::Wordle => include_str!("../../resources/games/wordle.json"),
            Flow::WordleClue => include_str!("../../resources/games/wordle_clue.json"),
            Flow::WordleCritic => include_str!("../../resources/games/wordle_critic.json"),
            Flow::Reference => include_str!("../../resources/games/reference.json"),
            Flow::Drawing => include_str!("../../resources/games/drawing.json"),
        }
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown game '{name}' (available: {available})")]
pub struct UnknownGame {
    pub name: String,
    pub available: String,
}

impl FromStr for Flow {
    type Err = UnknownGame;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Flow::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| UnknownGame {
                name: s.to_string(),
                available: Flow::ALL.map(Flow::as_str).join(", "),
            })
    }
}

pub(crate) fn run_flow(
    flow: Flow,
    gm: &mut GameMaster<'_>,
    ctx: &FlowContext<'_>,
) -> Result<Finish, Halt> {
    match flow {
        Flow::Taboo => taboo::play(gm, ctx),
        Flow::Wordle | Flow::WordleClue => wordle::play(gm, ctx, flow),
        Flow::WordleCritic => wordle::play_with_critic(gm, ctx),
        Flow::Reference => reference::play(gm, ctx),
        Flow::Drawing => drawing::play(gm, ctx),
    }
}

/// Format check of one response by `role`, without game-rule checks.
pub fn parse_response(flow: Flow, role: Role, text: &str, pack: &LocalePack) -> ParseResult {
    match (flow, role) {
        (Flow::Taboo, Role::PlayerA) => taboo::parse_clue(text, pack),
        (Flow::Taboo, _) => taboo::parse_guess(text, pack),
        (Flow::WordleCritic, Role::PlayerB) => wordle::parse_critic(text, pack),
        (f, _) if f.is_wordle() => wordle::parse_guess(text, pack),
        (Flow::Reference, Role::PlayerA) => reference::parse_expression(text, pack),
        (Flow::Reference, _) => match reference_parse_answer(text, pack) {
            Ok(choice) => ParseResult::Accepted {
                payload: serde_json::json!({ "choice": choice }),
            },
            Err(reason) => ParseResult::violation(reason),
        },
        (Flow::Drawing, Role::PlayerA) => drawing::parse_instruction(text, pack),
        (Flow::Drawing, _) => match drawing_turn_state(text, pack.filled_cell_char) {
            Ok(grid) => ParseResult::Accepted {
                payload: serde_json::to_value(grid).expect("grid serializes"),
            },
            Err(reason) => ParseResult::violation(reason),
        },
        _ => unreachable!("all flows covered"),
    }
}

/// Checks that `instance.params` fit the flow's schema.
pub fn check_instance(flow: Flow, instance: &GameInstance) -> Result<(), String> {
    match flow {
        Flow::Taboo => TabooInstance::from_instance(instance).map(|_| ()),
        Flow::Wordle => WordleInstance::from_instance(instance).map(|_| ()),
        Flow::WordleClue | Flow::WordleCritic => {
            let w = WordleInstance::from_instance(instance)?;
            if w.clue.as_deref().is_none_or(|c| c.trim().is_empty()) {
                return Err(format!("{flow} instances need a clue"));
            }
            Ok(())
        }
        Flow::Reference => ReferenceInstance::from_instance(instance).map(|_| ()),
        Flow::Drawing => DrawingInstance::from_instance(instance).map(|_| ()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("aborted episodes are not scored")]
    ScoringAbortedEpisode,
    #[error("transcript has no readable terminal record")]
    MissingTerminal,
    #[error("terminal summary is malformed: {0}")]
    BadSummary(String),
}

/// Main metric of one played episode, in [0, 100].
pub fn episode_quality(flow: Flow, transcript: &Transcript) -> Result<f64, ScoringError> {
    if transcript.outcome == Outcome::Aborted {
        return Err(ScoringError::ScoringAbortedEpisode);
    }
    let terminal = transcript.terminal().ok_or(ScoringError::MissingTerminal)?;
    match flow {
        Flow::Taboo | Flow::Wordle | Flow::WordleClue | Flow::WordleCritic => {
            if transcript.outcome != Outcome::Success {
                return Ok(0.0);
            }
            let rounds = terminal
                .summary
                .get("rounds")
                .and_then(|v| v.as_u64())
                .filter(|&t| t >= 1)
                .ok_or_else(|| ScoringError::BadSummary("missing rounds".into()))?;
            Ok(speed_quality(rounds as u32))
        }
        Flow::Reference => {
            let s: ReferenceSummary = serde_json::from_value(terminal.summary)
                .map_err(|e| ScoringError::BadSummary(e.to_string()))?;
            Ok(if s.choice == s.correct_choice { 100.0 } else { 0.0 })
        }
        Flow::Drawing => {
            let s: DrawingSummary = serde_json::from_value(terminal.summary)
                .map_err(|e| ScoringError::BadSummary(e.to_string()))?;
            Ok(100.0 * f1_score(&s.target, &s.drawn))
        }
    }
}

/// Speed metric for games won after `rounds` rounds.
pub fn speed_quality(rounds: u32) -> f64 {
    100.0 / f64::from(rounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_names_round_trip() {
        for f in Flow::ALL {
            assert_eq!(f.as_str().parse::<Flow>().unwrap(), f);
        }
        let err = "chess".parse::<Flow>().unwrap_err();
        assert!(err.to_string().contains("reference"));
    }

    #[test]
    fn speed_boundaries() {
        assert_eq!(speed_quality(1), 100.0);
        assert_eq!(speed_quality(2), 50.0);
    }

    #[test]
    fn speed_is_non_increasing() {
        for t in 1..50 {
            assert!(speed_quality(t + 1) <= speed_quality(t));
        }
    }
}
