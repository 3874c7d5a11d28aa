//! Bridge that lets a person answer prompts for one seat of an episode.
//!
//! The engine thread owns the [`HumanPlayer`]; whoever relays the person's
//! input (the session service) holds the [`HumanBridge`]. Responses cross
//! over a single-slot mailbox.

use std::sync::mpsc::{self, Receiver, RecvTimeoutError, SyncSender, TrySendError};
use std::time::Duration;

use thiserror::Error;

use super::{Message, MessageRole, Player, PlayerError};

/// Default inactivity limit before a human seat is given up.
pub const HUMAN_TIMEOUT: Duration = Duration::from_secs(30 * 60);

/// A prompt waiting for the human.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HumanPrompt {
    pub text: String,
    /// Responses the human has already given in this episode.
    pub answered: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubmitError {
    #[error("a response is already waiting to be read")]
    Busy,
    #[error("the episode no longer accepts responses")]
    Closed,
}

/// Sending half of the mailbox.
#[derive(Debug, Clone)]
pub struct HumanBridge {
    tx: SyncSender<String>,
}

impl HumanBridge {
    pub fn submit(&self, text: impl Into<String>) -> Result<(), SubmitError> {
        self.tx.try_send(text.into()).map_err(|e| match e {
            TrySendError::Full(_) => SubmitError::Busy,
            TrySendError::Disconnected(_) => SubmitError::Closed,
        })
    }
}

type PromptHook = Box<dyn FnMut(&HumanPrompt) + Send>;

/// Engine-side seat: announces each prompt through a hook, then blocks on
/// the mailbox until the human answers or the timeout passes.
pub struct HumanPlayer {
    id: String,
    rx: Receiver<String>,
    timeout: Duration,
    on_prompt: PromptHook,
}

impl std::fmt::Debug for HumanPlayer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HumanPlayer")
            .field("id", &self.id)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl HumanPlayer {
    pub fn new(
        id: impl Into<String>,
        timeout: Duration,
        on_prompt: impl FnMut(&HumanPrompt) + Send + 'static,
    ) -> (HumanPlayer, HumanBridge) {
        let (tx, rx) = mpsc::sync_channel(1);
        let player = HumanPlayer {
            id: id.into(),
            rx,
            timeout,
            on_prompt: Box::new(on_prompt),
        };
        (player, HumanBridge { tx })
    }
}

impl Player for HumanPlayer {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn respond(&mut self, history: &[Message]) -> Result<String, PlayerError> {
        let prompt = HumanPrompt {
            text: history.last().map(|m| m.content.clone()).unwrap_or_default(),
            answered: history.iter().filter(|m| m.role == MessageRole::Assistant).count(),
        };
        (self.on_prompt)(&prompt);
        match self.rx.recv_timeout(self.timeout) {
            Ok(text) => Ok(text),
            Err(RecvTimeoutError::Timeout | RecvTimeoutError::Disconnected) => {
                Err(PlayerError::HumanTimeout)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    #[test]
    fn relays_prompt_and_answer() {
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        let (mut player, bridge) = HumanPlayer::new("human", Duration::from_secs(5), move |p| {
            log.lock().unwrap().push(p.clone())
        });
        let engine = std::thread::spawn(move || player.respond(&[Message::user("your move")]));
        while seen.lock().unwrap().is_empty() {
            std::thread::yield_now();
        }
        bridge.submit("Answer: first").unwrap();
        assert_eq!(engine.join().unwrap().unwrap(), "Answer: first");
        assert_eq!(
            seen.lock().unwrap()[0],
            HumanPrompt {
                text: "your move".into(),
                answered: 0
            }
        );
    }

    #[test]
    fn silence_times_out() {
        let (mut player, _bridge) = HumanPlayer::new("human", Duration::from_millis(20), |_| {});
        assert_eq!(
            player.respond(&[Message::user("x")]),
            Err(PlayerError::HumanTimeout)
        );
    }

    #[test]
    fn mailbox_holds_one_response() {
        let (player, bridge) = HumanPlayer::new("human", Duration::from_secs(1), |_| {});
        bridge.submit("a").unwrap();
        assert_eq!(bridge.submit("b"), Err(SubmitError::Busy));
        drop(player);
        let (player, bridge) = HumanPlayer::new("human", Duration::from_secs(1), |_| {});
        drop(player);
        assert_eq!(bridge.submit("c"), Err(SubmitError::Closed));
    }
}
