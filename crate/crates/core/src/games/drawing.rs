//! Drawing game: player A instructs player B to reproduce a hidden grid.
//! B answers every instruction with the full current grid; A ends the
//! episode with the terminal token.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::grid::{PixelGrid, GRID_SIZE};
use super::text::{eq_ignore_case, find_prefixed};
use super::TemplateSlot;
use crate::engine::{Finish, FlowContext, GameInstance, GameMaster, Halt, LocalePack, ParseResult, Role};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawingInstance {
    pub target_grid: PixelGrid,
}

impl DrawingInstance {
    pub fn from_instance(instance: &GameInstance) -> Result<Self, String> {
        let d: DrawingInstance = super::instances::params_to(&instance.params)?;
        if d.target_grid.filled_count() == 0 {
            return Err("drawing target needs at least one filled cell".into());
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawingSummary {
    pub target: PixelGrid,
    pub drawn: PixelGrid,
}

/// Parses the drawer's reply: five non-blank lines of five cells each.
pub fn drawing_turn_state(response_text: &str, filled: char) -> Result<PixelGrid, String> {
    let rows: Vec<&str> = response_text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if rows.len() != GRID_SIZE {
        return Err(format!("expected {GRID_SIZE} grid lines, got {}", rows.len()));
    }
    PixelGrid::parse_rows(&rows, filled)
}

pub(crate) fn parse_instruction(text: &str, pack: &LocalePack) -> ParseResult {
    match find_prefixed(text, pack.keyword("instruction_prefix")) {
        None => ParseResult::violation("missing instruction prefix"),
        Some("") => ParseResult::violation("empty instruction"),
        Some(rest) => {
            let done = eq_ignore_case(
                rest.trim_end_matches(|c: char| c.is_ascii_punctuation()),
                pack.keyword("done_token"),
            );
            if done {
                ParseResult::Accepted { payload: json!({ "done": true }) }
            } else {
                ParseResult::Accepted { payload: json!({ "instruction": rest }) }
            }
        }
    }
}

pub(crate) fn play(gm: &mut GameMaster<'_>, ctx: &FlowContext<'_>) -> Result<Finish, Halt> {
    let inst = DrawingInstance::from_instance(ctx.instance).expect("instance checked before play");
    let filled = ctx.pack.filled_cell_char;
    let mut drawn = PixelGrid::empty();
    for turn in 0..ctx.max_turns() {
        gm.set_turn(turn);
        let prompt = if turn == 0 {
            ctx.render(
                TemplateSlot::Initial(Role::PlayerA),
                &[
                    ("TARGET_GRID", inst.target_grid.render(filled)),
                    ("N_TURNS", ctx.max_turns().to_string()),
                ],
            )?
        } else {
            ctx.render(TemplateSlot::Turn(Role::PlayerA), &[])?
        };
        let reply = gm.ask(Role::PlayerA, prompt)?;
        let payload = gm.check(Role::PlayerA, parse_instruction(&reply, ctx.pack))?;
        if payload.get("done").is_some() {
            return Ok(Finish::success(json!(DrawingSummary {
                target: inst.target_grid,
                drawn
            })));
        }
        let instruction = payload["instruction"].as_str().unwrap_or_default().to_string();

        let slot = if turn == 0 {
            TemplateSlot::Initial(Role::PlayerB)
        } else {
            TemplateSlot::Turn(Role::PlayerB)
        };
        let prompt = ctx.render(slot, &[("INSTRUCTION", instruction)])?;
        let reply = gm.ask(Role::PlayerB, prompt)?;
        let verdict = match drawing_turn_state(&reply, filled) {
            Ok(grid) => ParseResult::Accepted { payload: json!(grid) },
            Err(reason) => ParseResult::violation(reason),
        };
        let payload = gm.check(Role::PlayerB, verdict)?;
        drawn = serde_json::from_value(payload).expect("grid round-trips");
    }
    Ok(Finish::loss(
        "turn limit reached before the instruction giver finished",
        json!(DrawingSummary {
            target: inst.target_grid,
            drawn
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::GameSpec;
    use crate::games::Flow;

    #[test]
    fn empty_grid_parses() {
        let text = "▢ ▢ ▢ ▢ ▢\n".repeat(5);
        assert_eq!(drawing_turn_state(&text, 'X').unwrap(), PixelGrid::empty());
    }

    #[test]
    fn four_lines_rejected() {
        let text = "▢ ▢ ▢ ▢ ▢\n".repeat(4);
        assert!(drawing_turn_state(&text, 'X').is_err());
    }

    #[test]
    fn filled_mask_matches_rows() {
        let text = "X ▢ X ▢ X\n".repeat(5);
        let g = drawing_turn_state(&text, 'X').unwrap();
        for r in 0..5 {
            for c in 0..5 {
                assert_eq!(g.get(r, c), c % 2 == 0);
            }
        }
    }

    #[test]
    fn unknown_cell_rejected() {
        let text = "X ▢ O ▢ X\n".repeat(5);
        assert!(drawing_turn_state(&text, 'X').unwrap_err().contains("unknown cell"));
    }

    #[test]
    fn done_token_recognized() {
        let pack = GameSpec::builtin(Flow::Drawing).locale_packs["en"].clone();
        assert_eq!(
            parse_instruction("Instruction: DONE", &pack),
            ParseResult::Accepted { payload: json!({ "done": true }) }
        );
        assert_eq!(
            parse_instruction("instruction: done.", &pack),
            ParseResult::Accepted { payload: json!({ "done": true }) }
        );
        assert!(parse_instruction("Instruction: fill the top row", &pack)
            .is_accepted());
        assert!(!parse_instruction("fill the top row", &pack).is_accepted());
    }
}
