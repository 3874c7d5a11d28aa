mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use common::{fixed_clock, scripted};
use dialogue_games::backends::{builtin_registry, PlayerContext};
use dialogue_games::engine::{
    play_episode, AbortCause, EventKind, GameInstance, GameSpec, Outcome, Role, Transcript,
};
use dialogue_games::games::{generate_instances, Flow, WordPool};
use dialogue_games::metrics::{
    dense_ranks, export_leaderboard, kendall_tau_b, language_delta, leaderboard_rows,
    score_transcripts, sort_leaderboard, ExportFormat, GameResult, LoadedTranscript, ProductMode,
    ScoreOptions, ScoreReport, LEADERBOARD_COLUMNS,
};
use dialogue_games::{Backends, Player};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn candidates(flow: Flow, role: Role) -> Vec<String> {
    let grid_empty = "▢ ▢ ▢ ▢ ▢\n".repeat(5);
    let grid_full = "X X X X X\n".repeat(5);
    let v: Vec<&str> = match (flow, role) {
        (Flow::Taboo, Role::PlayerA) => vec![
            "CLUE: a big machine",
            "CLUE: something you ride",
            "just a hint",
            "CLUE:",
            "CLUE: a word",
        ],
        (Flow::Taboo, _) => vec!["GUESS: car", "GUESS: plane", "car", "GUESS:", "GUESS: tree"],
        (Flow::WordleCritic, Role::PlayerB) => vec![
            "agreement: yes\nexplanation: fine",
            "agreement: no\nexplanation: does not fit",
            "agreement: perhaps",
            "yes",
        ],
        (f, _) if f.is_wordle() => vec![
            "guess: crane",
            "guess: slate",
            "guess: abcdef",
            "crane",
            "guess: hello\nexplanation: common word",
        ],
        (Flow::Reference, Role::PlayerA) => vec!["Expression: the one with a line", "no idea", "Expression:"],
        (Flow::Reference, _) => vec!["Answer: first", "Answer: 3", "Answer: fourth", "second"],
        (Flow::Drawing, Role::PlayerA) => vec![
            "Instruction: fill everything",
            "Instruction: DONE",
            "just draw",
            "Instruction: clear the grid",
        ],
        (Flow::Drawing, _) => vec![grid_empty.as_str(), grid_full.as_str(), "X X", "X ▢ X ▢ X"]
            .into_iter()
            .map(|s| Box::leak(s.to_string().into_boxed_str()) as &str)
            .collect(),
        _ => unreachable!(),
    };
    v.into_iter().map(String::from).collect()
}

fn one_instance(flow: Flow, seed: u64) -> GameInstance {
    let n = if flow.uses_word_pool() { 5 } else { 3 };
    let file = generate_instances(flow, n, seed, Some(&WordPool::builtin(flow))).unwrap();
    file.instances(flow).unwrap().remove((seed % n as u64) as usize)
}

fn scripted_episode(flow: Flow, seed: u64, picks: &[Vec<usize>; 2], language: &str) -> Transcript {
    let spec = GameSpec::builtin(flow);
    let inst = one_instance(flow, seed);
    let mut players: BTreeMap<Role, Box<dyn Player>> = BTreeMap::new();
    for (i, role) in spec.roles.iter().enumerate() {
        let pool = candidates(flow, *role);
        let lines: Vec<&str> = picks[i].iter().map(|&k| pool[k % pool.len()].as_str()).collect();
        players.insert(*role, scripted(role.as_str(), &lines));
    }
    play_episode(&spec, &inst, &mut players, language, seed, &fixed_clock()).unwrap()
}

fn flow_strategy() -> impl Strategy<Value = Flow> {
    (0usize..Flow::ALL.len()).prop_map(|i| Flow::ALL[i])
}

fn picks_strategy() -> impl Strategy<Value = [Vec<usize>; 2]> {
    (
        prop::collection::vec(0usize..16, 0..30),
        prop::collection::vec(0usize..16, 0..30),
    )
        .prop_map(|(a, b)| [a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn transcripts_respect_abort_and_turn_rules(
        flow in flow_strategy(),
        seed in 0u64..1000,
        picks in picks_strategy(),
    ) {
        let spec = GameSpec::builtin(flow);
        let t = scripted_episode(flow, seed, &picks, "en");
        prop_assert!(t.check_invariants(spec.max_turns).is_ok(), "{:?}", t.check_invariants(spec.max_turns));
        prop_assert!(t.events.iter().all(|e| e.turn < spec.max_turns));

        let violation = t.events.iter().position(|e| e.kind == EventKind::FormatViolation);
        let infra_abort = matches!(t.abort_cause(), Some(AbortCause::Backend | AbortCause::HumanTimeout));
        prop_assert_eq!(t.outcome == Outcome::Aborted, violation.is_some() || infra_abort);
        if let Some(i) = violation {
            prop_assert_eq!(i + 2, t.events.len());
        }
    }

    #[test]
    fn replays_are_byte_identical(
        flow in flow_strategy(),
        seed in 0u64..1000,
        picks in picks_strategy(),
    ) {
        let a = serde_json::to_string(&scripted_episode(flow, seed, &picks, "en")).unwrap();
        let b = serde_json::to_string(&scripted_episode(flow, seed, &picks, "en")).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn missing_locale_behaves_like_english(
        flow in flow_strategy(),
        seed in 0u64..1000,
        picks in picks_strategy(),
    ) {
        let en = serde_json::to_string(&scripted_episode(flow, seed, &picks, "en")).unwrap();
        let xx = serde_json::to_string(&scripted_episode(flow, seed, &picks, "xx")).unwrap();
        prop_assert_eq!(en, xx);
    }

    #[test]
    fn templates_instantiate_on_generated_instances(flow in flow_strategy(), seed in any::<u64>()) {
        // Perfect bots reach every initial template; the losing script runs
        // every turn template up to the turn limit.
        let spec = GameSpec::builtin(flow);
        let inst = one_instance(flow, seed);
        let backends = Backends::new(builtin_registry());
        let perfect = backends.resolve("scripted:perfect").unwrap();
        let mut players: BTreeMap<Role, Box<dyn Player>> = BTreeMap::new();
        for role in &spec.roles {
            let ctx = PlayerContext { flow, role: *role, instance: &inst, pack: &spec.locale_packs["en"], seed };
            players.insert(*role, backends.player(&perfect, &ctx).unwrap());
        }
        let t = play_episode(&spec, &inst, &mut players, "en", seed, &fixed_clock());
        prop_assert!(t.is_ok());
        prop_assert_eq!(t.unwrap().outcome, Outcome::Success);

        let long: Vec<usize> = match flow {
            Flow::Drawing => vec![0; 40],
            Flow::Reference => vec![0, 1],
            _ => vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
        };
        let picks = match flow {
            Flow::Taboo => [vec![0; 10], vec![4; 10]],
            Flow::WordleCritic => [vec![4; 20], vec![1; 20]],
            f if f.is_wordle() => [vec![4; 20], vec![]],
            _ => [long.clone(), long],
        };
        let t = scripted_episode(flow, seed, &picks, "en");
        prop_assert!(t.check_invariants(spec.max_turns).is_ok());
    }
}

fn loaded(transcripts: Vec<Transcript>) -> Vec<LoadedTranscript> {
    transcripts
        .into_iter()
        .enumerate()
        .map(|(i, transcript)| LoadedTranscript {
            path: PathBuf::from(format!("t{i}.json")),
            transcript,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn scoring_ignores_file_order(
        episodes in prop::collection::vec((flow_strategy(), 0u64..200, picks_strategy()), 1..12),
        shuffle_seed in any::<u64>(),
    ) {
        let mut transcripts = Vec::new();
        for (i, (flow, seed, picks)) in episodes.iter().enumerate() {
            let mut t = scripted_episode(*flow, *seed, picks, "en");
            t.meta.instance_id = i as u64;
            transcripts.push(t);
        }
        let opts = ScoreOptions::default();
        let a = score_transcripts(&loaded(transcripts.clone()), &opts).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(shuffle_seed);
        transcripts.shuffle(&mut rng);
        let b = score_transcripts(&loaded(transcripts), &opts).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert_eq!(a, b);
    }
}

fn game_result() -> impl Strategy<Value = GameResult> {
    (1usize..40, prop::collection::vec(0.0f64..=100.0, 0..40)).prop_map(|(extra, qs)| {
        GameResult::from_qualities("g", qs.len() + extra % 3, &qs)
    })
}

proptest! {
    #[test]
    fn clemscore_bounds(games in prop::collection::vec(game_result(), 1..6)) {
        let r = ScoreReport::from_results("m", games, ProductMode::Macro);
        prop_assert!(r.clemscore >= 0.0);
        if let Some(q) = r.macro_quality {
            prop_assert!(r.clemscore <= q + 1e-9);
            prop_assert!(r.clemscore <= r.macro_pct_played + 1e-9);
            if r.macro_pct_played == 100.0 {
                prop_assert_eq!(r.clemscore, q);
            } else if q > 0.0 {
                prop_assert!(r.clemscore < q);
            }
        } else {
            prop_assert_eq!(r.clemscore, 0.0);
        }
        if r.macro_pct_played == 0.0 {
            prop_assert_eq!(r.clemscore, 0.0);
        }
    }

    #[test]
    fn leaderboard_order_is_scale_invariant(
        scores in prop::collection::vec(0.0f64..100.0, 1..12),
        factor in 0.01f64..100.0,
    ) {
        let reports: Vec<ScoreReport> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut r = ScoreReport::from_results(format!("m{i:02}"), vec![], ProductMode::Macro);
                r.clemscore = *s;
                r
            })
            .collect();
        let scaled: Vec<ScoreReport> = reports
            .iter()
            .cloned()
            .map(|mut r| {
                r.clemscore *= factor;
                r
            })
            .collect();
        let order = |rs: &[ScoreReport]| -> Vec<String> {
            sort_leaderboard(rs).into_iter().map(|r| r.model_id.clone()).collect()
        };
        prop_assert_eq!(order(&reports), order(&scaled));
    }
}

fn reports_strategy() -> impl Strategy<Value = Vec<ScoreReport>> {
    prop::collection::vec(prop::collection::vec(game_result(), 1..4), 1..8).prop_map(|models| {
        models
            .into_iter()
            .enumerate()
            .map(|(i, games)| ScoreReport::from_results(format!("m<{i}>&co"), games, ProductMode::Macro))
            .collect()
    })
}

fn html_cells(html: &str) -> Vec<Vec<String>> {
    html.lines()
        .filter(|l| l.starts_with("<tr>"))
        .map(|l| {
            l.split("<td>")
                .skip(1)
                .map(|c| {
                    c.split("</td>").next().unwrap().replace("&lt;", "<").replace("&gt;", ">")
                        .replace("&quot;", "\"").replace("&amp;", "&")
                })
                .collect()
        })
        .collect()
}

proptest! {
    #[test]
    fn same_language_delta_is_zero(reports in reports_strategy()) {
        let mut by_lang = BTreeMap::new();
        by_lang.insert("en".to_string(), reports.clone());
        by_lang.insert("en-copy".to_string(), reports);
        let table = language_delta(&by_lang, "en").unwrap();
        for row in &table.rows {
            for cell in &row.cells {
                match cell.value {
                    Some(_) => prop_assert_eq!(cell.delta, Some(0.0)),
                    None => prop_assert_eq!(cell.delta, None),
                }
            }
        }
    }

    #[test]
    fn dense_ranks_match_counting_oracle(scores in prop::collection::vec(0u8..10, 1..20)) {
        let scored: Vec<(String, f64)> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("m{i}"), f64::from(*s)))
            .collect();
        let ranks = dense_ranks(&scored);
        for (m, s) in &scored {
            let higher: BTreeSet<u64> = scored
                .iter()
                .filter(|o| o.1 > *s)
                .map(|o| o.1.to_bits())
                .collect();
            prop_assert_eq!(ranks[m], higher.len() + 1);
        }
    }

    #[test]
    fn exports_round_trip_to_the_same_rows(reports in reports_strategy()) {
        let rows: Vec<Vec<String>> = leaderboard_rows(&reports).into_iter().map(|r| r.to_vec()).collect();

        let csv_text = export_leaderboard(&reports, ExportFormat::Csv);
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        prop_assert_eq!(header, LEADERBOARD_COLUMNS.iter().map(|c| c.to_string()).collect::<Vec<_>>());
        let parsed: Vec<Vec<String>> = reader
            .records()
            .map(|r| r.unwrap().iter().map(String::from).collect())
            .collect();
        prop_assert_eq!(&parsed, &rows);

        let html = export_leaderboard(&reports, ExportFormat::Html);
        prop_assert_eq!(&html_cells(&html), &rows);
    }

    #[test]
    fn tau_is_bounded_symmetric_and_rank_based(
        pairs in prop::collection::vec((0u8..6, 0u8..6), 2..25),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let t = kendall_tau_b(&x, &y);
        prop_assert_eq!(t, kendall_tau_b(&y, &x));
        let squashed: Vec<f64> = x.iter().map(|v| v.powi(3) + 7.0).collect();
        prop_assert_eq!(t, kendall_tau_b(&squashed, &y));
        if let Some(t) = t {
            prop_assert!((-1.0..=1.0).contains(&t));
        }
    }
}
