//! Batch execution of a benchmark plan into a results directory.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::master::{play_episode, Clock};
use super::types::{pairing_id, AbortCause, GameInstance, GameSpec, LocalePack, Role, SpecError, Transcript};
use super::EngineError;
use crate::backends::{BackendError, BackendKind, Backends, ModelSpec, Player, PlayerContext, UnresolvableModel};
use crate::games::{generate_instances, Flow, GenerateError, InstanceFile, InstanceFileError, UnknownGame, WordPool};

pub const TRANSCRIPT_FILE: &str = "transcript.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Unresolvable(#[from] UnresolvableModel),
    #[error("model '{0}' is a human player; humans join through the session service")]
    HumanInBatch(String),
    #[error("the plan has no model pairings")]
    NoPairings,
    #[error("the plan has no games")]
    NoGames,
    #[error(transparent)]
    UnknownGame(#[from] UnknownGame),
    #[error("{game}: {source}")]
    Instances {
        game: String,
        source: InstanceFileError,
    },
    #[error("instance file {path} is for game '{found}'")]
    InstanceGameMismatch { path: String, found: String },
    #[error("{game}: {source}")]
    Generate { game: String, source: GenerateError },
    #[error("locale pack {path}: {reason}")]
    LocalePack { path: String, reason: String },
    #[error("cannot seat '{model}': {source}")]
    Player { model: String, source: BackendError },
    #[error("{game} instance {instance_id}: {source}")]
    Engine {
        game: String,
        instance_id: u64,
        source: EngineError,
    },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Model ids seated in role order. A pairing shorter than a game's role
/// list repeats its last id, so a single id means self-play.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing(pub Vec<String>);

impl Pairing {
    pub fn single(model: impl Into<String>) -> Self {
        Pairing(vec![model.into()])
    }

    pub fn seat(&self, roles: &[Role]) -> BTreeMap<Role, String> {
        roles
            .iter()
            .enumerate()
            .map(|(i, r)| (*r, self.0[i.min(self.0.len() - 1)].clone()))
            .collect()
    }
}

/// One game of a plan with the instances to play.
#[derive(Debug, Clone)]
pub struct GameRun {
    pub spec: GameSpec,
    pub instances: Vec<GameInstance>,
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub games: Vec<GameRun>,
    pub pairings: Vec<Pairing>,
    pub language: String,
    pub results_dir: PathBuf,
    pub seed: u64,
    /// Episodes played in parallel; 0 is treated as 1.
    pub jobs: usize,
    pub clock: Clock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedGame {
    pub game: String,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub games: Vec<PlannedGame>,
    pub pairings: Vec<Vec<String>>,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub seed: u64,
    pub plan: PlanRecord,
    pub started_at: String,
    pub finished_at: String,
    pub played: usize,
    pub skipped: usize,
    pub backend_failures: usize,
    /// Transcripts written by this run, relative to the results directory.
    pub episodes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub played: usize,
    pub skipped: usize,
    pub backend_failures: usize,
    pub transcripts: Vec<PathBuf>,
}

/// Seed of one episode, independent of the order episodes are played in.
pub fn episode_seed(run_seed: u64, game: &str, experiment: &str, instance_id: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(game.as_bytes());
    h.update([0]);
    h.update(experiment.as_bytes());
    h.update([0]);
    h.update(instance_id.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Directory name for a pairing id; characters outside `[A-Za-z0-9._-]`
/// become `_`.
pub fn pairing_dir(pairing: &str) -> String {
    pairing
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn transcript_path(results_dir: &Path, pairing: &str, game: &str, experiment: &str, instance_id: u64) -> PathBuf {
    results_dir
        .join(pairing_dir(pairing))
        .join(game)
        .join(experiment)
        .join(instance_id.to_string())
        .join(TRANSCRIPT_FILE)
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Serializes `transcript` to `path` via a temporary file and a rename.
pub fn write_transcript(path: &Path, transcript: &Transcript) -> Result<(), RunError> {
    let mut json = serde_json::to_string_pretty(transcript).expect("transcript serializes");
    json.push('\n');
    write_atomic(path, &json)
}

/// Reads every `<game>.<lang>.json` pack for `spec` from `dir` into it.
pub fn load_locale_packs(spec: &mut GameSpec, dir: &Path) -> Result<usize, RunError> {
    let prefix = format!("{}.", spec.game_name);
    let mut added = 0;
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let Some(lang) = name.strip_prefix(&prefix).and_then(|r| r.strip_suffix(".json")) else {
            continue;
        };
        if lang.is_empty() || lang.contains('.') {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let pack_err = |reason: String| RunError::LocalePack {
            path: path.display().to_string(),
            reason,
        };
        let pack: LocalePack = serde_json::from_str(&text).map_err(|e| pack_err(e.to_string()))?;
        if pack.language != lang {
            return Err(pack_err(format!(
                "declares language '{}' but the file name says '{lang}'",
                pack.language
            )));
        }
        spec.add_locale_pack(pack)
            .map_err(|e: SpecError| pack_err(e.to_string()))?;
        added += 1;
    }
    Ok(added)
}

/// Builds the game list of a plan from shipped specs.
///
/// Instances come from `<instances_dir>/<game>.json` when a directory is
/// given, otherwise `generate` instances per game are drawn with `seed`.
pub fn load_games(
    names: &[String],
    instances_dir: Option<&Path>,
    generate: usize,
    seed: u64,
    locale_dir: Option<&Path>,
) -> Result<Vec<GameRun>, RunError> {
    let mut out = Vec::new();
    for name in names {
        let flow: Flow = name.parse()?;
        let mut spec = GameSpec::builtin(flow);
        if let Some(dir) = locale_dir {
            load_locale_packs(&mut spec, dir)?;
        }
        let file = match instances_dir {
            Some(dir) => {
                let path = dir.join(format!("{name}.json"));
                let file = InstanceFile::load(&path).map_err(|source| RunError::Instances {
                    game: name.clone(),
                    source,
                })?;
                if file.game != *name {
                    return Err(RunError::InstanceGameMismatch {
                        path: path.display().to_string(),
                        found: file.game,
                    });
                }
                file
            }
            None => generate_instances(flow, generate, seed, Some(&WordPool::builtin(flow)))
                .map_err(|source| RunError::Generate {
                    game: name.clone(),
                    source,
                })?,
        };
        let instances = file.instances(flow).map_err(|source| RunError::Instances {
            game: name.clone(),
            source,
        })?;
        out.push(GameRun { spec, instances });
    }
    Ok(out)
}

struct Episode<'a> {
    game: &'a GameRun,
    instance: &'a GameInstance,
    seats: BTreeMap<Role, String>,
    path: PathBuf,
}

#[derive(Default)]
struct Progress {
    played: usize,
    backend_failures: usize,
    written: Vec<PathBuf>,
    error: Option<RunError>,
}

fn play_one(
    ep: &Episode<'_>,
    plan: &RunPlan,
    models: &BTreeMap<String, ModelSpec>,
    backends: &Backends,
) -> Result<Transcript, RunError> {
    let spec = &ep.game.spec;
    let inst = ep.instance;
    let seed = episode_seed(plan.seed, &spec.game_name, &inst.experiment_name, inst.instance_id);
    let (pack, _) = spec.pack(&plan.language);
    let mut players: BTreeMap<Role, Box<dyn Player>> = BTreeMap::new();
    for (role, model) in &ep.seats {
        let ctx = PlayerContext {
            flow: spec.flow,
            role: *role,
            instance: inst,
            pack,
            seed,
        };
        let player = backends
            .player(&models[model], &ctx)
            .map_err(|source| RunError::Player {
                model: model.clone(),
                source,
            })?;
        players.insert(*role, player);
    }
    play_episode(spec, inst, &mut players, &plan.language, seed, &plan.clock).map_err(|source| {
        RunError::Engine {
            game: spec.game_name.clone(),
            instance_id: inst.instance_id,
            source,
        }
    })
}

/// Plays every (pairing, game, instance) of `plan` that has no transcript
/// yet and writes the run manifest.
///
/// All model ids are resolved before the first episode. Backend failures
/// inside episodes are recorded in the transcripts and counted, not raised.
pub fn run_benchmark(plan: &RunPlan, backends: &Backends) -> Result<RunSummary, RunError> {
    if plan.pairings.iter().all(|p| p.0.is_empty()) {
        return Err(RunError::NoPairings);
    }
    if plan.games.is_empty() {
        return Err(RunError::NoGames);
    }
    let mut models = BTreeMap::new();
    for id in plan.pairings.iter().flat_map(|p| &p.0) {
        let spec = backends.resolve(id)?;
        if spec.backend_kind == BackendKind::Human {
            return Err(RunError::HumanInBatch(id.clone()));
        }
        models.insert(id.clone(), spec);
    }
    for game in &plan.games {
        if game.spec.pack(&plan.language).1 {
            log::warn!(
                "{}: no '{}' locale pack, falling back to English",
                game.spec.game_name,
                plan.language
            );
        }
    }

    let started_at = plan.clock.now();
    let mut summary = RunSummary::default();
    let mut todo = Vec::new();
    for pairing in plan.pairings.iter().filter(|p| !p.0.is_empty()) {
        for game in &plan.games {
            let seats = pairing.seat(&game.spec.roles);
            let pid = pairing_id(seats.values().map(String::as_str));
            for instance in &game.instances {
                let path = transcript_path(
                    &plan.results_dir,
                    &pid,
                    &game.spec.game_name,
                    &instance.experiment_name,
                    instance.instance_id,
                );
                summary.transcripts.push(path.clone());
                if path.exists() {
                    summary.skipped += 1;
                    continue;
                }
                todo.push(Episode {
                    game,
                    instance,
                    seats: seats.clone(),
                    path,
                });
            }
        }
    }

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let progress = Mutex::new(Progress::default());
    let workers = plan.jobs.max(1).min(todo.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(ep) = todo.get(i) else { break };
                let result = play_one(ep, plan, &models, backends)
                    .and_then(|t| write_transcript(&ep.path, &t).map(|_| t));
                let mut p = progress.lock().expect("progress lock poisoned");
                match result {
                    Ok(t) => {
                        p.played += 1;
                        if t.abort_cause() == Some(AbortCause::Backend) {
                            log::warn!("{}: backend failure", ep.path.display());
                            p.backend_failures += 1;
                        }
                        p.written.push(ep.path.clone());
                    }
                    Err(e) => {
                        stop.store(true, Ordering::Relaxed);
                        p.error.get_or_insert(e);
                    }
                }
            });
        }
    });
    let mut progress = progress.into_inner().expect("progress lock poisoned");
    if let Some(e) = progress.error {
        return Err(e);
    }
    progress.written.sort();
    summary.played = progress.played;
    summary.backend_failures = progress.backend_failures;

    let manifest = RunManifest {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: plan.seed,
        plan: PlanRecord {
            games: plan
                .games
                .iter()
                .map(|g| PlannedGame {
                    game: g.spec.game_name.clone(),
                    instances: g.instances.len(),
                })
                .collect(),
            pairings: plan.pairings.iter().map(|p| p.0.clone()).collect(),
            language: plan.language.clone(),
        },
        started_at,
        finished_at: plan.clock.now(),
        played: summary.played,
        skipped: summary.skipped,
        backend_failures: summary.backend_failures,
        episodes: progress
            .written
            .iter()
            .map(|p| {
                p.strip_prefix(&plan.results_dir)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .replace('\\', "/")
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_atomic(&plan.results_dir.join(MANIFEST_FILE), &json)?;
    Ok(summary)
}
