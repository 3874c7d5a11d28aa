use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chrono::{TimeZone, Utc};
use dialogue_games::backends::ScriptedPlayer;
use dialogue_games::engine::{play_episode, transcript_path, write_transcript, Clock, GameInstance, Role};
use dialogue_games::games::{DrawingInstance, Flow, PixelGrid, TabooInstance, WordleInstance};
use dialogue_games::{GameSpec, Player};
use serde::Serialize;
use serde_json::Value;

fn dgames(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgames"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1717243200")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn count_transcripts(dir: &Path) -> usize {
    if !dir.exists() {
        return 0;
    }
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            n += count_transcripts(&p);
        } else if p.file_name().unwrap() == "transcript.json" {
            n += 1;
        }
    }
    n
}

#[test]
fn run_scripted_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let results = tmp.path().join("results");
    let o = dgames(&[
        "run", "--games", "reference", "--models", "scripted:perfect_reference", "--lang", "en",
        "--n", "4", "--results", results.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(count_transcripts(&results), 4);
    assert!(results.join("manifest.json").exists());

    let o = dgames(&["leaderboard", results.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "model,sc,%pl,qs\nscripted:perfect_reference,100.00,100.00,100.00\n");
}

#[test]
fn unknown_game_lists_available_games() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dgames(&[
        "run", "--games", "chess", "--models", "scripted:perfect", "--results",
        tmp.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("chess"), "{err}");
    assert!(err.contains("reference") && err.contains("wordle"), "{err}");
    assert!(!err.contains("panicked"));
}

#[test]
fn unknown_model_plays_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let results = tmp.path().join("r");
    let o = dgames(&[
        "run", "--games", "reference", "--models", "scripted:perfect,gpt-x", "--results",
        results.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gpt-x"));
    assert_eq!(count_transcripts(&results), 0);
}

#[test]
fn missing_locale_falls_back_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let results = tmp.path().join("r");
    let o = dgames(&[
        "run", "--games", "reference", "--models", "scripted:perfect", "--lang", "xx", "--n", "2",
        "--results", results.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("falling back to English"), "{}", stderr(&o));
    assert_eq!(count_transcripts(&results), 2);
}

#[test]
fn backend_failures_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let registry = tmp.path().join("models.json");
    fs::write(
        &registry,
        r#"[{"model_id": "down", "backend_kind": "remote_chat",
            "endpoint_url": "http://127.0.0.1:9/v1/chat/completions",
            "auth_env_var": "DG_CLI_TEST_UNSET_KEY"}]"#,
    )
    .unwrap();
    let results = tmp.path().join("r");
    let o = dgames(&[
        "run", "--games", "reference", "--models", "down", "--n", "2", "--registry",
        registry.to_str().unwrap(), "--results", results.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(count_transcripts(&results), 2);
}

#[test]
fn instances_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.json");
    let b = tmp.path().join("b.json");
    for out in [&a, &b] {
        let o = dgames(&["instances", "reference", "--n", "5", "--seed", "1", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["game"], "reference");
}

#[test]
fn correlate_identical_rankings() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.csv");
    fs::write(&a, "model,score\nm1,60.9\nm2,58.2\nm3,37.1\nm4,30.0\n").unwrap();
    let pairs = tmp.path().join("pairs.csv");
    let o = dgames(&[
        "correlate", a.to_str().unwrap(), a.to_str().unwrap(), "--pairs-out", pairs.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.starts_with("tau=1.000 p="), "{line}");
    assert!(line.trim_end().ends_with("n=4"), "{line}");
    assert_eq!(
        fs::read_to_string(&pairs).unwrap(),
        "model,rank_a,rank_b\nm1,1,1\nm2,2,2\nm3,3,3\nm4,4,4\n"
    );
}

fn instance<T: Serialize>(flow: Flow, id: u64, params: &T) -> GameInstance {
    let params = match serde_json::to_value(params).unwrap() {
        Value::Object(map) => map.into_iter().collect(),
        _ => unreachable!(),
    };
    GameInstance {
        game_name: flow.as_str().into(),
        experiment_name: "default".into(),
        instance_id: id,
        params,
    }
}

fn write_episode(results: &Path, flow: Flow, inst: &GameInstance, scripts: &[(Role, Vec<String>)]) {
    let spec = GameSpec::builtin(flow);
    let mut players: BTreeMap<Role, Box<dyn Player>> = BTreeMap::new();
    for (role, script) in scripts {
        players.insert(*role, Box::new(ScriptedPlayer::new("human", script.clone())));
    }
    let clock = Clock::Fixed(Utc.with_ymd_and_hms(2024, 6, 1, 12, 0, 0).unwrap());
    let t = play_episode(&spec, inst, &mut players, "en", 0, &clock).unwrap();
    let path = transcript_path(results, "human", flow.as_str(), "default", inst.instance_id);
    write_transcript(&path, &t).unwrap();
}

fn lines(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Human-play style transcripts whose per-game qualities are 72, 80.5,
/// 95.2 and 100 with every episode played.
fn human_play_results(results: &Path) {
    let crane = WordleInstance {
        target_word: "crane".into(),
        clue: None,
    };
    let wordle_rounds = [1, 1, 1, 1, 1, 1, 2, 2, 5, 0];
    for (id, rounds) in (0u64..).zip(wordle_rounds) {
        let script: Vec<&str> = match rounds {
            0 => vec!["guess: slate"; 6],
            r => {
                let mut s = vec!["guess: slate"; r - 1];
                s.push("guess: crane");
                s
            }
        };
        write_episode(results, Flow::Wordle, &instance(Flow::Wordle, id, &crane), &[(Role::PlayerA, lines(&script))]);
    }

    let plane = TabooInstance {
        target_word: "plane".into(),
        related_words: vec!["fly".into(), "wing".into(), "airport".into()],
    };
    for i in 0..100 {
        let (clues, guesses) = if i < 61 {
            (vec!["CLUE: a vehicle"], vec!["GUESS: plane"])
        } else {
            (
                vec!["CLUE: a vehicle", "CLUE: it has engines and takes off"],
                vec!["GUESS: car", "GUESS: plane"],
            )
        };
        write_episode(
            results,
            Flow::Taboo,
            &instance(Flow::Taboo, i, &plane),
            &[(Role::PlayerA, lines(&clues)), (Role::PlayerB, lines(&guesses))],
        );
    }

    let mut diagonal = PixelGrid::empty();
    for i in 0..5 {
        diagonal.set(i, i, true);
    }
    // Four of five cells plus one stray cell: F1 = 0.8.
    let mut near = PixelGrid::empty();
    for i in 0..4 {
        near.set(i, i, true);
    }
    near.set(0, 4, true);
    for i in 0..25 {
        let drawn = if i < 19 { diagonal.render('X') } else { near.render('X') };
        write_episode(
            results,
            Flow::Drawing,
            &instance(Flow::Drawing, i, &DrawingInstance { target_grid: diagonal }),
            &[
                (Role::PlayerA, lines(&["Instruction: draw the diagonal", "Instruction: DONE"])),
                (Role::PlayerB, vec![drawn]),
            ],
        );
    }

    let file = dialogue_games::games::generate_instances(Flow::Reference, 4, 3, None).unwrap();
    for inst in file.instances(Flow::Reference).unwrap() {
        let correct = dialogue_games::games::ReferenceInstance::from_instance(&inst)
            .unwrap()
            .correct_choice;
        write_episode(
            results,
            Flow::Reference,
            &inst,
            &[
                (Role::PlayerA, lines(&["Expression: the target"])),
                (Role::PlayerB, vec![format!("Answer: {correct}")]),
            ],
        );
    }
}

#[test]
fn score_of_human_play_transcripts_is_86_93() {
    let tmp = tempfile::tempdir().unwrap();
    let results = tmp.path().join("human");
    human_play_results(&results);

    let o = dgames(&["score", results.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let reports: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let per_game: BTreeMap<String, Value> = reports[0]["per_game"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| (g["game_name"].as_str().unwrap().to_string(), g["quality"].clone()))
        .collect();
    assert_eq!(per_game["wordle"], 72.0);
    assert_eq!(per_game["taboo"], 80.5);
    assert_eq!(per_game["drawing"], 95.2);
    assert_eq!(per_game["reference"], 100.0);
    assert_eq!(reports[0]["clemscore"].to_string(), "86.93");

    let o = dgames(&["leaderboard", results.to_str().unwrap()]);
    assert_eq!(stdout(&o), "model,sc,%pl,qs\nhuman,86.93,100.00,86.93\n");
}

#[test]
fn score_builds_language_delta_table() {
    let tmp = tempfile::tempdir().unwrap();
    let (en, xx) = (tmp.path().join("en"), tmp.path().join("xx"));
    for (dir, lang) in [(&en, "en"), (&xx, "xx")] {
        let o = dgames(&[
            "run", "--games", "reference", "--models", "scripted:perfect", "--n", "2", "--lang", lang,
            "--results", dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let o = dgames(&[
        "score",
        &format!("en={}", en.display()),
        &format!("xx={}", xx.display()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "model,metric,en,xx\nscripted:perfect,pct_played,100.0 (0.00),100.0 (0.00)\nscripted:perfect,quality,100.0 (0.00),100.0 (0.00)\n"
    );
}

#[test]
fn score_of_empty_dir_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dgames(&["score", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}
