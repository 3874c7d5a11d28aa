//! Wordle and its clue and critic variants.

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::text::{eq_ignore_case, find_prefixed, normalize_token};
use super::{Flow, TemplateSlot};
use crate::engine::{Finish, FlowContext, GameInstance, GameMaster, Halt, LocalePack, ParseResult, Role};

pub const WORD_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    CorrectPosition,
    InWord,
    Absent,
}

pub type WordleFeedback = Vec<Mark>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeedbackError {
    #[error("guess and target must both have {WORD_LEN} letters (got {guess} and {target})")]
    BadLength { guess: usize, target: usize },
}

/// Two-pass feedback: exact matches first, then present-elsewhere marks
/// drawn from the target letters left over, left to right.
pub fn wordle_feedback(guess: &str, target: &str) -> Result<WordleFeedback, FeedbackError> {
    let g: Vec<char> = guess.chars().collect();
    let t: Vec<char> = target.chars().collect();
    if g.len() != WORD_LEN || t.len() != WORD_LEN {
        return Err(FeedbackError::BadLength {
            guess: g.len(),
            target: t.len(),
        });
    }
    let mut marks = vec![Mark::Absent; WORD_LEN];
    let mut remaining: Vec<char> = Vec::with_capacity(WORD_LEN);
    for i in 0..WORD_LEN {
        if g[i] == t[i] {
            marks[i] = Mark::CorrectPosition;
        } else {
            remaining.push(t[i]);
        }
    }
    for i in 0..WORD_LEN {
        if marks[i] == Mark::CorrectPosition {
            continue;
        }
        if let Some(pos) = remaining.iter().position(|&c| c == g[i]) {
            remaining.swap_remove(pos);
            marks[i] = Mark::InWord;
        }
    }
    Ok(marks)
}

fn mark_word(mark: Mark, pack: &LocalePack) -> &str {
    match mark {
        Mark::CorrectPosition => pack.keyword("fb_correct"),
        Mark::InWord => pack.keyword("fb_present"),
        Mark::Absent => pack.keyword("fb_absent"),
    }
}

/// `c<green> r<yellow> a<red> ...` with the pack's colour words.
pub fn render_feedback(guess: &str, feedback: &[Mark], pack: &LocalePack) -> String {
    guess
        .chars()
        .zip(feedback)
        .map(|(c, &m)| format!("{c}<{}>", mark_word(m, pack)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Finds the last line of `text` rendered by [`render_feedback`].
pub fn parse_feedback_line(text: &str, pack: &LocalePack) -> Option<(String, WordleFeedback)> {
    let parse_cell = |cell: &str| -> Option<(char, Mark)> {
        let (letter, rest) = cell.split_once('<')?;
        let colour = rest.strip_suffix('>')?;
        let mut chars = letter.chars();
        let c = chars.next()?;
        if chars.next().is_some() {
            return None;
        }
        let mark = [Mark::CorrectPosition, Mark::InWord, Mark::Absent]
            .into_iter()
            .find(|&m| eq_ignore_case(mark_word(m, pack), colour))?;
        Some((c, mark))
    };
    text.lines().rev().find_map(|line| {
        let cells: Option<Vec<(char, Mark)>> = line
            .split_whitespace()
            .filter(|tok| tok.contains('<'))
            .map(parse_cell)
            .collect();
        let cells = cells?;
        (cells.len() == WORD_LEN).then(|| {
            let word: String = cells.iter().map(|(c, _)| c.to_lowercase().to_string()).collect();
            (word, cells.into_iter().map(|(_, m)| m).collect())
        })
    })
}

/// Whether `candidate` could be the target given one observed feedback.
pub fn oracle_consistent(candidate: &str, guess: &str, feedback: &[Mark]) -> bool {
    wordle_feedback(guess, candidate)
        .map(|fb| fb == feedback)
        .unwrap_or(false)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordleInstance {
    pub target_word: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clue: Option<String>,
}

pub(crate) fn is_wordle_word(word: &str) -> bool {
    word.chars().count() == WORD_LEN && word.chars().all(|c| c.is_alphabetic() && !c.is_uppercase())
}

impl WordleInstance {
    pub fn from_instance(instance: &GameInstance) -> Result<Self, String> {
        let w: WordleInstance = super::instances::params_to(&instance.params)?;
        if !is_wordle_word(&w.target_word) {
            return Err(format!(
                "wordle target '{}' must be {WORD_LEN} lowercase letters",
                w.target_word
            ));
        }
        Ok(w)
    }
}

pub(crate) fn parse_guess(text: &str, pack: &LocalePack) -> ParseResult {
    let Some(rest) = find_prefixed(text, pack.keyword("guess_prefix")) else {
        return ParseResult::violation("missing guess prefix");
    };
    let mut words = rest.split_whitespace();
    let word = words.next().map(normalize_token).unwrap_or_default();
    if words.next().is_some() || !is_wordle_word(&word) {
        return ParseResult::violation(format!("guess must be a single {WORD_LEN}-letter word"));
    }
    ParseResult::Accepted {
        payload: json!({ "word": word }),
    }
}

pub(crate) fn parse_critic(text: &str, pack: &LocalePack) -> ParseResult {
    let Some(verdict) = find_prefixed(text, pack.keyword("agreement_prefix")) else {
        return ParseResult::violation("missing agreement prefix");
    };
    let verdict = normalize_token(verdict);
    let agreement = if eq_ignore_case(&verdict, &normalize_token(pack.keyword("agreement_yes"))) {
        true
    } else if eq_ignore_case(&verdict, &normalize_token(pack.keyword("agreement_no"))) {
        false
    } else {
        return ParseResult::violation("agreement must be yes or no");
    };
    let Some(explanation) = find_prefixed(text, pack.keyword("explanation_prefix")) else {
        return ParseResult::violation("missing explanation prefix");
    };
    ParseResult::Accepted {
        payload: json!({ "agreement": agreement, "explanation": explanation }),
    }
}

fn guess_of(payload: &serde_json::Value) -> String {
    payload["word"].as_str().unwrap_or_default().to_string()
}

fn load(ctx: &FlowContext<'_>) -> WordleInstance {
    WordleInstance::from_instance(ctx.instance).expect("instance checked before play")
}

fn proposal_prompt(
    ctx: &FlowContext<'_>,
    round: u32,
    clue: &str,
    feedback: &str,
) -> Result<String, Halt> {
    let max = ctx.max_turns();
    if round == 0 {
        ctx.render(
            TemplateSlot::Initial(Role::PlayerA),
            &[("N_TURNS", max.to_string()), ("CLUE", clue.to_string())],
        )
    } else {
        ctx.render(
            TemplateSlot::Turn(Role::PlayerA),
            &[
                ("FEEDBACK", feedback.to_string()),
                ("TURNS_LEFT", (max - round).to_string()),
                ("CLUE", clue.to_string()),
            ],
        )
    }
}

pub(crate) fn play(gm: &mut GameMaster<'_>, ctx: &FlowContext<'_>, flow: Flow) -> Result<Finish, Halt> {
    debug_assert!(matches!(flow, Flow::Wordle | Flow::WordleClue));
    let inst = load(ctx);
    let clue = inst.clue.clone().unwrap_or_default();
    let mut guesses: Vec<String> = Vec::new();
    let mut feedback = String::new();
    for round in 0..ctx.max_turns() {
        gm.set_turn(round);
        let prompt = proposal_prompt(ctx, round, &clue, &feedback)?;
        let reply = gm.ask(Role::PlayerA, prompt)?;
        let guess = guess_of(&gm.check(Role::PlayerA, parse_guess(&reply, ctx.pack))?);
        guesses.push(guess.clone());
        if guess == inst.target_word {
            return Ok(Finish::success(json!({ "rounds": round + 1, "guesses": guesses })));
        }
        let marks = wordle_feedback(&guess, &inst.target_word).expect("lengths validated");
        feedback = render_feedback(&guess, &marks, ctx.pack);
    }
    Ok(Finish::loss(
        "no guesses left",
        json!({ "rounds": ctx.max_turns(), "guesses": guesses }),
    ))
}

/// Each round: the guesser proposes, the critic judges the proposal, the
/// verdict is relayed verbatim and the guesser commits a final guess.
pub(crate) fn play_with_critic(gm: &mut GameMaster<'_>, ctx: &FlowContext<'_>) -> Result<Finish, Halt> {
    let inst = load(ctx);
    let clue = inst.clue.clone().unwrap_or_default();
    let mut guesses: Vec<String> = Vec::new();
    let mut feedback = String::new();
    for round in 0..ctx.max_turns() {
        gm.set_turn(round);
        let prompt = proposal_prompt(ctx, round, &clue, &feedback)?;
        let reply = gm.ask(Role::PlayerA, prompt)?;
        let proposal = guess_of(&gm.check(Role::PlayerA, parse_guess(&reply, ctx.pack))?);

        let critic_slot = if round == 0 {
            TemplateSlot::Initial(Role::PlayerB)
        } else {
            TemplateSlot::Turn(Role::PlayerB)
        };
        let critic_prompt = ctx.render(
            critic_slot,
            &[("CLUE", clue.clone()), ("GUESS", proposal.clone())],
        )?;
        let verdict = gm.ask(Role::PlayerB, critic_prompt)?;
        gm.check(Role::PlayerB, parse_critic(&verdict, ctx.pack))?;

        let relay = ctx.render(
            TemplateSlot::Extra("critic_relay"),
            &[("CRITIC_RESPONSE", verdict), ("GUESS", proposal)],
        )?;
        let reply = gm.ask(Role::PlayerA, relay)?;
        let guess = guess_of(&gm.check(Role::PlayerA, parse_guess(&reply, ctx.pack))?);
        guesses.push(guess.clone());
        if guess == inst.target_word {
            return Ok(Finish::success(json!({ "rounds": round + 1, "guesses": guesses })));
        }
        let marks = wordle_feedback(&guess, &inst.target_word).expect("lengths validated");
        feedback = render_feedback(&guess, &marks, ctx.pack);
    }
    Ok(Finish::loss(
        "no guesses left",
        json!({ "rounds": ctx.max_turns(), "guesses": guesses }),
    ))
}
