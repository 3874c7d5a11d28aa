//! Taboo: describe the target word without uttering it or its related words.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::text::{find_prefixed, find_prefixed_block, normalize_token, tokens};
use super::TemplateSlot;
use crate::engine::{Finish, FlowContext, GameInstance, GameMaster, Halt, LocalePack, ParseResult, Role};

/// Shortest shared prefix that counts as saying a forbidden word.
pub const MIN_PREFIX_OVERLAP: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabooInstance {
    pub target_word: String,
    pub related_words: Vec<String>,
}

impl TabooInstance {
    pub fn from_instance(instance: &GameInstance) -> Result<Self, String> {
        let t: TabooInstance = super::instances::params_to(&instance.params)?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok_word = |w: &str| !w.is_empty() && !w.chars().any(|c| c.is_whitespace() || c.is_uppercase());
        if !ok_word(&self.target_word) {
            return Err(format!("bad taboo target '{}'", self.target_word));
        }
        if self.related_words.len() != 3 || !self.related_words.iter().all(|w| ok_word(w)) {
            return Err(format!(
                "taboo target '{}' needs exactly 3 lowercase related words",
                self.target_word
            ));
        }
        if self.related_words.contains(&self.target_word) {
            return Err(format!("target '{}' is among its related words", self.target_word));
        }
        Ok(())
    }

    fn forbidden(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.target_word.as_str()).chain(self.related_words.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClueVerdict {
    Accepted { clue: String },
    FormatViolation(String),
    RuleViolation(String),
}

fn collides(token: &str, word: &str, exact_only: bool) -> bool {
    if token == word {
        return true;
    }
    if exact_only {
        return false;
    }
    let (short, long) = if token.chars().count() <= word.chars().count() {
        (token, word)
    } else {
        (word, token)
    };
    short.chars().count() >= MIN_PREFIX_OVERLAP && long.starts_with(short)
}

/// Format and rule check of a describer's clue.
///
/// The clue is everything after the clue prefix. A token collides with a
/// forbidden word when they are equal or one is a prefix of the other of at
/// least [`MIN_PREFIX_OVERLAP`] characters, after case folding and
/// punctuation stripping.
pub fn taboo_judge_clue(clue_text: &str, instance: &TabooInstance, keywords: &LocalePack) -> ClueVerdict {
    let Some(clue) = find_prefixed_block(clue_text, keywords.keyword("clue_prefix")) else {
        return ClueVerdict::FormatViolation("missing clue prefix".into());
    };
    if clue.is_empty() {
        return ClueVerdict::FormatViolation("empty clue".into());
    }
    for token in tokens(clue) {
        for word in instance.forbidden() {
            let word = normalize_token(word);
            if !word.is_empty() && collides(&token, &word, keywords.exact_match_only) {
                return ClueVerdict::RuleViolation(word);
            }
        }
    }
    ClueVerdict::Accepted { clue: clue.to_string() }
}

pub(crate) fn parse_clue(text: &str, pack: &LocalePack) -> ParseResult {
    match find_prefixed_block(text, pack.keyword("clue_prefix")) {
        None => ParseResult::violation("missing clue prefix"),
        Some("") => ParseResult::violation("empty clue"),
        Some(clue) => ParseResult::Accepted { payload: json!({ "clue": clue }) },
    }
}

pub(crate) fn parse_guess(text: &str, pack: &LocalePack) -> ParseResult {
    let Some(rest) = find_prefixed(text, pack.keyword("guess_prefix")) else {
        return ParseResult::violation("missing guess prefix");
    };
    match rest.split_whitespace().next().map(normalize_token) {
        Some(word) if !word.is_empty() => ParseResult::Accepted { payload: json!({ "word": word }) },
        _ => ParseResult::violation("empty guess"),
    }
}

pub(crate) fn play(gm: &mut GameMaster<'_>, ctx: &FlowContext<'_>) -> Result<Finish, Halt> {
    let inst = TabooInstance::from_instance(ctx.instance).expect("instance checked before play");
    let mut last_guess = String::new();
    for round in 0..ctx.max_turns() {
        gm.set_turn(round);
        let prompt = if round == 0 {
            ctx.render(
                TemplateSlot::Initial(Role::PlayerA),
                &[
                    ("TARGET_WORD", inst.target_word.clone()),
                    ("REL_WORDS", inst.related_words.join(", ")),
                    ("N_TURNS", ctx.max_turns().to_string()),
                ],
            )?
        } else {
            ctx.render(TemplateSlot::Turn(Role::PlayerA), &[("GUESS", last_guess.clone())])?
        };
        let reply = gm.ask(Role::PlayerA, prompt)?;
        let clue = match taboo_judge_clue(&reply, &inst, ctx.pack) {
            ClueVerdict::FormatViolation(reason) => return Err(gm.reject(Role::PlayerA, reason)),
            ClueVerdict::RuleViolation(word) => {
                gm.check(Role::PlayerA, parse_clue(&reply, ctx.pack))?;
                let reason = format!("clue uses forbidden word '{word}'");
                gm.rule_violation(Role::PlayerA, &reason);
                return Ok(Finish::loss(reason, json!({ "rounds": round + 1, "violation": word })));
            }
            ClueVerdict::Accepted { clue } => {
                gm.check(Role::PlayerA, ParseResult::Accepted { payload: json!({ "clue": clue }) })?;
                clue
            }
        };

        let slot = if round == 0 {
            TemplateSlot::Initial(Role::PlayerB)
        } else {
            TemplateSlot::Turn(Role::PlayerB)
        };
        let prompt = ctx.render(slot, &[("CLUE", clue), ("N_TURNS", ctx.max_turns().to_string())])?;
        let reply = gm.ask(Role::PlayerB, prompt)?;
        let payload = gm.check(Role::PlayerB, parse_guess(&reply, ctx.pack))?;
        last_guess = payload["word"].as_str().unwrap_or_default().to_string();
        if last_guess == normalize_token(&inst.target_word) {
            return Ok(Finish::success(json!({ "rounds": round + 1 })));
        }
    }
    Ok(Finish::loss("target not guessed", json!({ "rounds": ctx.max_turns() })))
}
