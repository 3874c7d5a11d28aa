//! Consistency-filtering wordle bot used as a reference player in tests.

use thiserror::Error;

use super::{BackendError, BackendErrorKind, Message, MessageRole, Player, PlayerContext, PlayerError};
use crate::engine::{LocalePack, Role};
use crate::games::{oracle_consistent, parse_feedback_line, Flow, WordPool, WordleFeedback};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no pool word is consistent with the feedback received")]
pub struct EmptyCandidateSet;

/// Feedback lines the game master sent so far, oldest first.
pub fn observed_feedback(history: &[Message], pack: &LocalePack) -> Vec<(String, WordleFeedback)> {
    history
        .iter()
        .filter(|m| m.role == MessageRole::User)
        .filter_map(|m| parse_feedback_line(&m.content, pack))
        .collect()
}

/// Pool words consistent with every observation, sorted.
pub fn oracle_candidates<'a>(
    pool: impl IntoIterator<Item = &'a str>,
    observations: &[(String, WordleFeedback)],
) -> Vec<&'a str> {
    let mut out: Vec<&str> = pool
        .into_iter()
        .filter(|w| w.chars().count() == 5)
        .filter(|w| {
            observations
                .iter()
                .all(|(guess, fb)| oracle_consistent(w, guess, fb))
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// The oracle's next reply: the lexicographically first pool word that is
/// consistent with all feedback in `history`, behind the guess prefix.
pub fn oracle_wordle(
    history: &[Message],
    pool: &WordPool,
    pack: &LocalePack,
) -> Result<String, EmptyCandidateSet> {
    let observations = observed_feedback(history, pack);
    let word = oracle_candidates(pool.words(), &observations)
        .first()
        .copied()
        .ok_or(EmptyCandidateSet)?;
    Ok(format!("{} {}", pack.keyword("guess_prefix"), word))
}

/// Player wrapper around [`oracle_wordle`] for the guesser seat.
#[derive(Debug, Clone)]
pub struct OraclePlayer {
    id: String,
    pool: WordPool,
    pack: LocalePack,
}

impl OraclePlayer {
    pub fn new(id: impl Into<String>, ctx: &PlayerContext<'_>, pool: WordPool) -> Result<Self, BackendError> {
        if !ctx.flow.is_wordle() || ctx.role != Role::PlayerA {
            return Err(BackendError::new(
                BackendErrorKind::Unsupported,
                format!("the wordle oracle cannot play {} in {}", ctx.role, ctx.flow),
            ));
        }
        debug_assert!(matches!(ctx.flow, Flow::Wordle | Flow::WordleClue | Flow::WordleCritic));
        Ok(OraclePlayer {
            id: id.into(),
            pool,
            pack: ctx.pack.clone(),
        })
    }
}

impl Player for OraclePlayer {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn respond(&mut self, history: &[Message]) -> Result<String, PlayerError> {
        oracle_wordle(history, &self.pool, &self.pack).map_err(|e| {
            PlayerError::Backend(BackendError::new(BackendErrorKind::EmptyCandidateSet, e.to_string()))
        })
    }
}
