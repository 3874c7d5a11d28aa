//! Programmatic players: script replay, a perfect player that reads the
//! instance, and a uniform random guesser for the reference game.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BackendError, BackendErrorKind, Message, MessageRole, Player, PlayerContext, PlayerError};
use crate::engine::{LocalePack, Role};
use crate::games::{DrawingInstance, Flow, ReferenceInstance, TabooInstance, WordleInstance};

fn assistant_turns(history: &[Message]) -> usize {
    history.iter().filter(|m| m.role == MessageRole::Assistant).count()
}

/// Replays a fixed list of responses, one per prompt.
#[derive(Debug, Clone)]
pub struct ScriptedPlayer {
    id: String,
    script: Vec<String>,
}

impl ScriptedPlayer {
    pub fn new(id: impl Into<String>, script: Vec<String>) -> Self {
        ScriptedPlayer {
            id: id.into(),
            script,
        }
    }

    /// The response for the prompt at the end of `history`; the position is
    /// the number of responses already given.
    pub fn reply(&self, history: &[Message]) -> Result<String, BackendError> {
        let n = assistant_turns(history);
        self.script.get(n).cloned().ok_or_else(|| {
            BackendError::new(
                BackendErrorKind::ScriptExhausted,
                format!("'{}' has {} scripted responses, asked for #{}", self.id, self.script.len(), n + 1),
            )
        })
    }
}

impl Player for ScriptedPlayer {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn respond(&mut self, history: &[Message]) -> Result<String, PlayerError> {
        Ok(self.reply(history)?)
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Describe { clue: String },
    Say(String),
    Instruct { first: String, done: String },
}

/// Wins every shipped game in the fewest possible rounds by reading the
/// instance it is seated in.
#[derive(Debug, Clone)]
pub struct PerfectPlayer {
    id: String,
    plan: Plan,
}

fn bad_instance(e: String) -> BackendError {
    BackendError::new(BackendErrorKind::Unsupported, e)
}

impl PerfectPlayer {
    pub fn new(id: impl Into<String>, ctx: &PlayerContext<'_>) -> Result<Self, BackendError> {
        let pack: &LocalePack = ctx.pack;
        let kw = |k: &str| pack.keyword(k).to_string();
        let plan = match (ctx.flow, ctx.role) {
            (Flow::Taboo, Role::PlayerA) => {
                let inst = TabooInstance::from_instance(ctx.instance).map_err(bad_instance)?;
                // Single letters never collide under the minimum prefix overlap.
                let spelled: Vec<String> = inst.target_word.chars().map(String::from).collect();
                Plan::Describe {
                    clue: format!("{} {}", kw("clue_prefix"), spelled.join(" ")),
                }
            }
            (Flow::Taboo, _) => {
                let inst = TabooInstance::from_instance(ctx.instance).map_err(bad_instance)?;
                Plan::Say(format!("{} {}", kw("guess_prefix"), inst.target_word))
            }
            (Flow::WordleCritic, Role::PlayerB) => Plan::Say(format!(
                "{} {}\n{} the guess fits the clue",
                kw("agreement_prefix"),
                kw("agreement_yes"),
                kw("explanation_prefix"),
            )),
            (f, _) if f.is_wordle() => {
                let inst = WordleInstance::from_instance(ctx.instance).map_err(bad_instance)?;
                Plan::Say(format!("{} {}", kw("guess_prefix"), inst.target_word))
            }
            (Flow::Reference, Role::PlayerA) => {
                ReferenceInstance::from_instance(ctx.instance).map_err(bad_instance)?;
                Plan::Say(format!("{} the first grid", kw("expression_prefix")))
            }
            (Flow::Reference, _) => {
                let inst = ReferenceInstance::from_instance(ctx.instance).map_err(bad_instance)?;
                Plan::Say(format!(
                    "{} {}",
                    kw("answer_prefix"),
                    kw(&format!("ordinal_{}", inst.correct_choice))
                ))
            }
            (Flow::Drawing, Role::PlayerA) => {
                DrawingInstance::from_instance(ctx.instance).map_err(bad_instance)?;
                Plan::Instruct {
                    first: format!("{} copy the target grid", kw("instruction_prefix")),
                    done: format!("{} {}", kw("instruction_prefix"), kw("done_token")),
                }
            }
            (Flow::Drawing, _) => {
                let inst = DrawingInstance::from_instance(ctx.instance).map_err(bad_instance)?;
                Plan::Say(inst.target_grid.render(pack.filled_cell_char))
            }
            (flow, role) => {
                return Err(BackendError::new(
                    BackendErrorKind::Unsupported,
                    format!("no perfect strategy for {role} in {flow}"),
                ))
            }
        };
        Ok(PerfectPlayer { id: id.into(), plan })
    }
}

impl Player for PerfectPlayer {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn respond(&mut self, history: &[Message]) -> Result<String, PlayerError> {
        Ok(match &self.plan {
            Plan::Describe { clue } => clue.clone(),
            Plan::Say(text) => text.clone(),
            Plan::Instruct { first, done } => {
                if assistant_turns(history) == 0 {
                    first.clone()
                } else {
                    done.clone()
                }
            }
        })
    }
}

/// Reference-game player that describes nothing and picks a grid uniformly
/// at random, seeded by the episode seed.
#[derive(Debug, Clone)]
pub struct RandomReferencePlayer {
    id: String,
    role: Role,
    rng: ChaCha8Rng,
    expression_prefix: String,
    answer_prefix: String,
}

impl RandomReferencePlayer {
    pub fn new(id: impl Into<String>, ctx: &PlayerContext<'_>) -> Result<Self, BackendError> {
        if ctx.flow != Flow::Reference {
            return Err(BackendError::new(
                BackendErrorKind::Unsupported,
                format!("the random strategy only plays reference, not {}", ctx.flow),
            ));
        }
        Ok(RandomReferencePlayer {
            id: id.into(),
            role: ctx.role,
            rng: ChaCha8Rng::seed_from_u64(ctx.seed),
            expression_prefix: ctx.pack.keyword("expression_prefix").to_string(),
            answer_prefix: ctx.pack.keyword("answer_prefix").to_string(),
        })
    }
}

impl Player for RandomReferencePlayer {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn respond(&mut self, _history: &[Message]) -> Result<String, PlayerError> {
        Ok(match self.role {
            Role::PlayerA => format!("{} a grid", self.expression_prefix),
            _ => format!("{} {}", self.answer_prefix, self.rng.random_range(1..=3u8)),
        })
    }
}
