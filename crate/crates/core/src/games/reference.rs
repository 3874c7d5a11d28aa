//! Reference game: player A describes the first of three grids, player B
//! picks the described grid from the same three in a shuffled order.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::grid::PixelGrid;
use super::text::{eq_ignore_case, find_prefixed, normalize_token};
use super::TemplateSlot;
use crate::engine::{Finish, FlowContext, GameInstance, GameMaster, Halt, LocalePack, ParseResult, Role};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceInstance {
    /// Target first.
    pub grids: [PixelGrid; 3],
    /// `order_for_b[i]` is the 1-based index into `grids` shown at position `i + 1`.
    pub order_for_b: [u8; 3],
    /// 1-based position of the target in player B's order.
    pub correct_choice: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub choice: u8,
    pub correct_choice: u8,
}

impl ReferenceInstance {
    pub fn new(grids: [PixelGrid; 3], order_for_b: [u8; 3]) -> Self {
        let correct = order_for_b.iter().position(|&g| g == 1).map_or(0, |p| p as u8 + 1);
        ReferenceInstance {
            grids,
            order_for_b,
            correct_choice: correct,
        }
    }

    pub fn from_instance(instance: &GameInstance) -> Result<Self, String> {
        let r: ReferenceInstance = super::instances::params_to(&instance.params)?;
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut sorted = self.order_for_b;
        sorted.sort_unstable();
        if sorted != [1, 2, 3] {
            return Err(format!("order_for_b {:?} is not a permutation of 1..=3", self.order_for_b));
        }
        let expected = self.order_for_b.iter().position(|&g| g == 1).unwrap() as u8 + 1;
        if self.correct_choice != expected {
            return Err(format!(
                "correct_choice {} disagrees with order_for_b {:?}",
                self.correct_choice, self.order_for_b
            ));
        }
        let [a, b, c] = &self.grids;
        if a == b || a == c || b == c {
            return Err("reference grids must be pairwise distinct".into());
        }
        Ok(())
    }

    /// Grids in the order player B sees them.
    pub fn grids_for_b(&self) -> [PixelGrid; 3] {
        self.order_for_b.map(|g| self.grids[usize::from(g) - 1])
    }
}

/// Reads `<answer prefix> <ordinal word | 1 | 2 | 3>`.
pub fn reference_parse_answer(text: &str, keywords: &LocalePack) -> Result<u8, String> {
    let rest = find_prefixed(text, keywords.keyword("answer_prefix"))
        .ok_or_else(|| "missing answer prefix".to_string())?;
    let token = rest
        .split_whitespace()
        .next()
        .map(normalize_token)
        .unwrap_or_default();
    for n in 1..=3u8 {
        let ordinal = normalize_token(keywords.keyword(&format!("ordinal_{n}")));
        if token == n.to_string() || eq_ignore_case(&token, &ordinal) {
            return Ok(n);
        }
    }
    Err(format!("'{rest}' does not name one of the three grids"))
}

pub(crate) fn parse_expression(text: &str, pack: &LocalePack) -> ParseResult {
    match find_prefixed(text, pack.keyword("expression_prefix")) {
        None => ParseResult::violation("missing expression prefix"),
        Some("") => ParseResult::violation("empty expression"),
        Some(expr) => ParseResult::Accepted { payload: json!({ "expression": expr }) },
    }
}

pub(crate) fn play(gm: &mut GameMaster<'_>, ctx: &FlowContext<'_>) -> Result<Finish, Halt> {
    let inst = ReferenceInstance::from_instance(ctx.instance).expect("instance checked before play");
    let filled = ctx.pack.filled_cell_char;
    let render = |grids: &[PixelGrid; 3]| -> Vec<(&'static str, String)> {
        vec![
            ("GRID1", grids[0].render(filled)),
            ("GRID2", grids[1].render(filled)),
            ("GRID3", grids[2].render(filled)),
        ]
    };

    gm.set_turn(0);
    let prompt = ctx.render(TemplateSlot::Initial(Role::PlayerA), &render(&inst.grids))?;
    let reply = gm.ask(Role::PlayerA, prompt)?;
    let payload = gm.check(Role::PlayerA, parse_expression(&reply, ctx.pack))?;
    let expression = payload["expression"].as_str().unwrap_or_default().to_string();

    let mut params = render(&inst.grids_for_b());
    params.push(("EXPRESSION", expression));
    let prompt = ctx.render(TemplateSlot::Initial(Role::PlayerB), &params)?;
    let reply = gm.ask(Role::PlayerB, prompt)?;
    let verdict = match reference_parse_answer(&reply, ctx.pack) {
        Ok(choice) => ParseResult::Accepted { payload: json!({ "choice": choice }) },
        Err(reason) => ParseResult::violation(reason),
    };
    let payload = gm.check(Role::PlayerB, verdict)?;
    let choice = payload["choice"].as_u64().unwrap_or_default() as u8;
    let summary = json!(ReferenceSummary {
        choice,
        correct_choice: inst.correct_choice
    });
    if choice == inst.correct_choice {
        Ok(Finish::success(summary))
    } else {
        Ok(Finish::loss("wrong grid chosen", summary))
    }
}
