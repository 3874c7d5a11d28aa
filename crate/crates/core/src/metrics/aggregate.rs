//! Episode-to-leaderboard aggregation: per-game results, macro averages and
//! the combined score.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use super::format::{de_num, de_opt, ser_round, ser_round_opt};
use crate::engine::{AbortCause, Outcome, Transcript, TRANSCRIPT_FILE};
use crate::games::{episode_quality, Flow, ScoringError, UnknownGame};

/// How per-game results combine into the overall score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMode {
    /// macro %played / 100 × macro quality.
    #[default]
    Macro,
    /// Mean over games of %played / 100 × quality, undefined quality as 0.
    PerGame,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    pub product: ProductMode,
    /// Drop episodes aborted by backend failures from every count.
    pub exclude_backend_failures: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub game_name: String,
    pub n_total: usize,
    pub n_played: usize,
    #[serde(default)]
    pub n_backend_failures: usize,
    #[serde(serialize_with = "ser_round", deserialize_with = "de_num")]
    pub pct_played: f64,
    #[serde(serialize_with = "ser_round_opt", deserialize_with = "de_opt")]
    pub quality: Option<f64>,
    #[serde(serialize_with = "ser_round_opt", deserialize_with = "de_opt")]
    pub quality_stddev: Option<f64>,
}

impl GameResult {
    /// Result of a game with `n_total` episodes, `qualities` holding the
    /// main metric of each played one.
    pub fn from_qualities(game_name: impl Into<String>, n_total: usize, qualities: &[f64]) -> Self {
        assert!(qualities.len() <= n_total, "more played than total episodes");
        let n_played = qualities.len();
        let (quality, quality_stddev) = if n_played == 0 {
            (None, None)
        } else {
            let n = n_played as f64;
            let mean = qualities.iter().sum::<f64>() / n;
            let var = qualities.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / n;
            (Some(mean), Some(var.sqrt()))
        };
        GameResult {
            game_name: game_name.into(),
            n_total,
            n_played,
            n_backend_failures: 0,
            pct_played: if n_total == 0 {
                0.0
            } else {
                100.0 * n_played as f64 / n_total as f64
            },
            quality,
            quality_stddev,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub model_id: String,
    pub per_game: Vec<GameResult>,
    #[serde(serialize_with = "ser_round", deserialize_with = "de_num")]
    pub macro_pct_played: f64,
    #[serde(serialize_with = "ser_round_opt", deserialize_with = "de_opt")]
    pub macro_quality: Option<f64>,
    #[serde(serialize_with = "ser_round", deserialize_with = "de_num")]
    pub clemscore: f64,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl ScoreReport {
    /// Macro averages are unweighted over games; undefined qualities are
    /// left out of the quality mean.
    pub fn from_results(model_id: impl Into<String>, per_game: Vec<GameResult>, mode: ProductMode) -> Self {
        let macro_pct_played = mean(per_game.iter().map(|g| g.pct_played)).unwrap_or(0.0);
        let macro_quality = mean(per_game.iter().filter_map(|g| g.quality));
        let clemscore = match mode {
            ProductMode::Macro => macro_quality.map_or(0.0, |q| macro_pct_played / 100.0 * q),
            ProductMode::PerGame => mean(
                per_game
                    .iter()
                    .map(|g| g.pct_played / 100.0 * g.quality.unwrap_or(0.0)),
            )
            .unwrap_or(0.0),
        };
        ScoreReport {
            model_id: model_id.into(),
            per_game,
            macro_pct_played,
            macro_quality,
            clemscore,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("no transcripts found under {0}")]
    EmptyRun(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: malformed transcript: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    UnknownGame { path: String, source: UnknownGame },
    #[error("{path}: {source}")]
    Scoring { path: String, source: ScoringError },
}

/// A transcript with the path it was read from, for error messages.
#[derive(Debug, Clone)]
pub struct LoadedTranscript {
    pub path: PathBuf,
    pub transcript: Transcript,
}

/// Every transcript file below `results_dir`, sorted by path.
pub fn load_transcripts(results_dir: &Path) -> Result<Vec<LoadedTranscript>, ScoreError> {
    let mut out = Vec::new();
    for entry in WalkDir::new(results_dir).sort_by_file_name() {
        let entry = entry.map_err(|e| ScoreError::Io {
            path: results_dir.display().to_string(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() || entry.file_name() != TRANSCRIPT_FILE {
            continue;
        }
        let path = entry.into_path();
        let text = std::fs::read_to_string(&path).map_err(|source| ScoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let transcript = serde_json::from_str(&text).map_err(|source| ScoreError::Json {
            path: path.display().to_string(),
            source,
        })?;
        out.push(LoadedTranscript { path, transcript });
    }
    Ok(out)
}

/// Groups transcripts by pairing and game and scores each group.
///
/// The result does not depend on the order of `transcripts`: groups are
/// keyed maps and episodes are sorted before summing.
pub fn score_transcripts(
    transcripts: &[LoadedTranscript],
    options: &ScoreOptions,
) -> Result<Vec<ScoreReport>, ScoreError> {
    type Key = (String, u64);
    struct Tally {
        total: usize,
        backend: usize,
        played: Vec<(Key, f64)>,
    }
    let mut groups: BTreeMap<String, BTreeMap<String, Tally>> = BTreeMap::new();
    for lt in transcripts {
        let t = &lt.transcript;
        let path = || lt.path.display().to_string();
        let backend_failure = t.outcome == Outcome::Aborted && t.abort_cause() == Some(AbortCause::Backend);
        if backend_failure && options.exclude_backend_failures {
            continue;
        }
        let flow: Flow = t
            .meta
            .game
            .parse()
            .map_err(|source| ScoreError::UnknownGame { path: path(), source })?;
        let tally = groups
            .entry(t.meta.pairing())
            .or_default()
            .entry(t.meta.game.clone())
            .or_insert(Tally {
                total: 0,
                backend: 0,
                played: Vec::new(),
            });
        tally.total += 1;
        if backend_failure {
            tally.backend += 1;
        }
        if t.outcome != Outcome::Aborted {
            let q = episode_quality(flow, t).map_err(|source| ScoreError::Scoring { path: path(), source })?;
            tally
                .played
                .push(((t.meta.experiment.clone(), t.meta.instance_id), q));
        }
    }
    Ok(groups
        .into_iter()
        .map(|(pairing, games)| {
            let per_game = games
                .into_iter()
                .map(|(game, mut tally)| {
                    tally
                        .played
                        .sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                    let qualities: Vec<f64> = tally.played.iter().map(|(_, q)| *q).collect();
                    let mut r = GameResult::from_qualities(game, tally.total, &qualities);
                    r.n_backend_failures = tally.backend;
                    r
                })
                .collect();
            ScoreReport::from_results(pairing, per_game, options.product)
        })
        .collect())
}

/// Scores every transcript below `results_dir`, one report per pairing.
pub fn score_run(results_dir: &Path, options: &ScoreOptions) -> Result<Vec<ScoreReport>, ScoreError> {
    let transcripts = load_transcripts(results_dir)?;
    if transcripts.is_empty() {
        return Err(ScoreError::EmptyRun(results_dir.display().to_string()));
    }
    score_transcripts(&transcripts, options)
}
