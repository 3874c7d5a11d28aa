//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use dialogue_games::backends::ScriptedPlayer;
use dialogue_games::engine::{Clock, GameInstance, Role};
use dialogue_games::games::Flow;
use dialogue_games::Player;
use serde::Serialize;
use serde_json::Value;

pub fn fixed_clock() -> Clock {
    Clock::Fixed(Utc.with_ymd_and_hms(2024, 6, 1, 12, 0, 0).unwrap())
}

pub fn instance<T: Serialize>(flow: Flow, id: u64, params: &T) -> GameInstance {
    let params = match serde_json::to_value(params).unwrap() {
        Value::Object(map) => map.into_iter().collect(),
        _ => panic!("params must be an object"),
    };
    GameInstance {
        game_name: flow.as_str().to_string(),
        experiment_name: "default".to_string(),
        instance_id: id,
        params,
    }
}

pub fn scripted(id: &str, lines: &[&str]) -> Box<dyn Player> {
    Box::new(ScriptedPlayer::new(id, lines.iter().map(|s| s.to_string()).collect()))
}

pub fn seats(players: Vec<(Role, Box<dyn Player>)>) -> BTreeMap<Role, Box<dyn Player>> {
    players.into_iter().collect()
}
