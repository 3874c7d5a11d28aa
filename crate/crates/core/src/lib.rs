//! Self-play dialogue game benchmark engine.
//!
//! Games are declared through prompt templates and response parsing rules
//! ([`engine::GameSpec`], [`engine::LocalePack`]). A game master drives the
//! players turn by turn ([`engine::play_episode`]), aborting an episode on the
//! first response that fails the parsing rules, and writes one transcript per
//! episode ([`engine::run_benchmark`]). Transcripts are scored per game on a
//! 0-100 main metric and aggregated into leaderboards ([`metrics`]).
//!
//! Players come from [`backends`]: remote chat-completion endpoints, scripted
//! and oracle bots for desk-scale testing, and a mailbox bridge for humans.

pub mod backends;
pub mod engine;
pub mod games;
pub mod metrics;

pub use backends::{BackendError, Backends, Message, ModelSpec, Player, PlayerError};
pub use engine::{
    play_episode, run_benchmark, Event, EventKind, GameInstance, GameSpec, LocalePack, Outcome,
    ParseResult, Role, Transcript,
};
pub use games::Flow;
pub use metrics::{CorrelationResult, GameResult, ScoreReport};
