//! HTTP service for live human play and read-only access to results.
//!
//! Each session runs its episode on a dedicated engine thread. The human
//! seat is a [`HumanPlayer`]; the handlers hold the matching
//! [`HumanBridge`] and watch the shared session view for state changes.

use std::collections::{BTreeMap, HashMap};
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dialogue_games::backends::{BackendKind, HumanBridge, HumanPlayer, PlayerContext};
use dialogue_games::engine::{
    episode_seed, pairing_id, play_episode_observed, transcript_path, write_transcript, Clock,
    Event, GameRun, Outcome, Role,
};
use dialogue_games::metrics::{score_run, sort_leaderboard, ScoreError, ScoreOptions};
use dialogue_games::{Backends, Player};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingHuman,
    AwaitingEngine,
    Finished,
}

/// Session state as served to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub game: String,
    pub experiment: String,
    pub instance_id: u64,
    pub language: String,
    pub human_role: Role,
    pub partner_model: String,
    pub status: SessionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_prompt: Option<String>,
    pub transcript_so_far: Vec<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    /// Location of the finished transcript under the results directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    pub game: String,
    pub instance_id: u64,
    pub human_role: Role,
    #[serde(default = "default_language")]
    pub language: String,
    #[serde(default)]
    pub experiment: Option<String>,
    /// Model for the seats the human does not take.
    #[serde(default)]
    pub partner_model: Option<String>,
}

fn default_language() -> String {
    "en".into()
}

#[derive(Debug, Clone, Deserialize)]
pub struct SubmitResponse {
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub results_dir: PathBuf,
    pub seed: u64,
    pub clock: Clock,
    pub human_timeout: Duration,
    /// Longest a request waits for the engine before returning the
    /// session as `awaiting_engine`.
    pub engine_wait: Duration,
    pub default_partner: String,
}

impl ServiceConfig {
    pub fn new(results_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            results_dir: results_dir.into(),
            seed: 42,
            clock: Clock::from_env(),
            human_timeout: dialogue_games::backends::HUMAN_TIMEOUT,
            engine_wait: Duration::from_secs(60),
            default_partner: "scripted:perfect".into(),
        }
    }
}

struct Shared {
    view: Mutex<Session>,
    changed: Condvar,
}

impl Shared {
    fn update(&self, f: impl FnOnce(&mut Session)) {
        let mut view = self.view.lock().expect("session lock poisoned");
        if view.status != SessionStatus::Finished {
            f(&mut view);
        }
        self.changed.notify_all();
    }

    fn snapshot(&self) -> Session {
        self.view.lock().expect("session lock poisoned").clone()
    }

    /// Blocks until the engine hands control back or `limit` passes.
    fn wait_for_engine(&self, limit: Duration) -> Session {
        let deadline = Instant::now() + limit;
        let mut view = self.view.lock().expect("session lock poisoned");
        while view.status == SessionStatus::AwaitingEngine {
            let now = Instant::now();
            if now >= deadline {
                break;
            }
            view = self
                .changed
                .wait_timeout(view, deadline - now)
                .expect("session lock poisoned")
                .0;
        }
        view.clone()
    }
}

struct Entry {
    shared: Arc<Shared>,
    bridge: HumanBridge,
}

pub struct AppState {
    games: BTreeMap<String, GameRun>,
    backends: Backends,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Entry>>>,
}

impl AppState {
    pub fn new(games: Vec<GameRun>, backends: Backends, config: ServiceConfig) -> Self {
        AppState {
            games: games
                .into_iter()
                .map(|g| (g.spec.game_name.clone(), g))
                .collect(),
            backends,
            config,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    fn entry(&self, id: &str) -> Option<Arc<Entry>> {
        self.sessions
            .lock()
            .expect("session store poisoned")
            .get(id)
            .cloned()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/games", get(list_games))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/response", post(submit_response))
        .route("/leaderboard", get(leaderboard))
        .route("/transcripts/{*path}", get(transcript))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

async fn list_games(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let games: Vec<_> = state
        .games
        .values()
        .map(|g| {
            json!({
                "game": g.spec.game_name,
                "roles": g.spec.roles,
                "languages": g.spec.locale_packs.keys().collect::<Vec<_>>(),
                "instances": g.instances.iter().map(|i| json!({
                    "experiment": i.experiment_name,
                    "instance_id": i.instance_id,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    Json(json!(games))
}

async fn wait(shared: Arc<Shared>, limit: Duration) -> Result<Session, ApiError> {
    tokio::task::spawn_blocking(move || shared.wait_for_engine(limit))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<Session>), ApiError> {
    let bad = |m: String| ApiError::new(StatusCode::BAD_REQUEST, m);
    let game = state.games.get(&req.game).ok_or_else(|| {
        let available: Vec<&str> = state.games.keys().map(String::as_str).collect();
        bad(format!("unknown game '{}'; available: {}", req.game, available.join(", ")))
    })?;
    let instance = game
        .instances
        .iter()
        .find(|i| {
            i.instance_id == req.instance_id
                && req.experiment.as_ref().is_none_or(|e| *e == i.experiment_name)
        })
        .ok_or_else(|| bad(format!("game '{}' has no instance {}", req.game, req.instance_id)))?
        .clone();
    if !game.spec.roles.contains(&req.human_role) {
        return Err(bad(format!(
            "game '{}' has no role {}",
            req.game,
            req.human_role.as_str()
        )));
    }
    let partner_id = req
        .partner_model
        .clone()
        .unwrap_or_else(|| state.config.default_partner.clone());
    let partner = state
        .backends
        .resolve(&partner_id)
        .map_err(|e| bad(e.to_string()))?;
    if partner.backend_kind == BackendKind::Human {
        return Err(bad("the partner seat cannot be a human".into()));
    }

    let session_id = uuid::Uuid::new_v4().to_string();
    let shared = Arc::new(Shared {
        view: Mutex::new(Session {
            session_id: session_id.clone(),
            game: req.game.clone(),
            experiment: instance.experiment_name.clone(),
            instance_id: instance.instance_id,
            language: req.language.clone(),
            human_role: req.human_role,
            partner_model: partner_id,
            status: SessionStatus::AwaitingEngine,
            pending_prompt: None,
            transcript_so_far: Vec::new(),
            outcome: None,
            transcript_path: None,
            error: None,
        }),
        changed: Condvar::new(),
    });
    let hook_shared = shared.clone();
    let (human, bridge) = HumanPlayer::new("human", state.config.human_timeout, move |p| {
        hook_shared.update(|s| {
            s.status = SessionStatus::AwaitingHuman;
            s.pending_prompt = Some(p.text.clone());
        })
    });
    state.sessions.lock().expect("session store poisoned").insert(
        session_id.clone(),
        Arc::new(Entry {
            shared: shared.clone(),
            bridge,
        }),
    );

    let engine_state = state.clone();
    let engine_shared = shared.clone();
    let language = req.language.clone();
    std::thread::spawn(move || {
        let result = run_session(&engine_state, &engine_shared, &req.game, &instance, req.human_role, human, &partner, &language);
        let mut view = engine_shared.view.lock().expect("session lock poisoned");
        view.status = SessionStatus::Finished;
        view.pending_prompt = None;
        match result {
            Ok((outcome, path)) => {
                view.outcome = Some(outcome);
                view.transcript_path = Some(path);
            }
            Err(e) => view.error = Some(e),
        }
        engine_shared.changed.notify_all();
    });

    let view = wait(shared, state.config.engine_wait).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

/// Plays the episode on the engine thread; returns the outcome and the
/// transcript location relative to the results directory.
#[allow(clippy::too_many_arguments)]
fn run_session(
    state: &AppState,
    shared: &Shared,
    game: &str,
    instance: &dialogue_games::GameInstance,
    human_role: Role,
    human: HumanPlayer,
    partner: &dialogue_games::ModelSpec,
    language: &str,
) -> Result<(Outcome, String), String> {
    let spec = &state.games[game].spec;
    let seed = episode_seed(
        state.config.seed,
        game,
        &instance.experiment_name,
        instance.instance_id,
    );
    let (pack, fallback) = spec.pack(language);
    if fallback {
        log::warn!("{game}: no '{language}' locale pack, falling back to English");
    }
    let mut players: BTreeMap<Role, Box<dyn Player>> = BTreeMap::new();
    let mut human = Some(human);
    for role in &spec.roles {
        if *role == human_role {
            players.insert(*role, Box::new(human.take().expect("one human seat")));
            continue;
        }
        let ctx = PlayerContext {
            flow: spec.flow,
            role: *role,
            instance,
            pack,
            seed,
        };
        let player = state
            .backends
            .player(partner, &ctx)
            .map_err(|e| format!("{}: {e}", partner.model_id))?;
        players.insert(*role, player);
    }
    let mut observer = |e: &Event| {
        let e = e.clone();
        shared.update(move |s| s.transcript_so_far.push(e));
    };
    let transcript = play_episode_observed(
        spec,
        instance,
        &mut players,
        language,
        seed,
        &state.config.clock,
        Some(&mut observer),
    )
    .map_err(|e| e.to_string())?;

    let pairing = pairing_id(transcript.meta.players.values().map(String::as_str));
    let path = transcript_path(
        &state.config.results_dir,
        &pairing,
        game,
        &instance.experiment_name,
        instance.instance_id,
    );
    write_transcript(&path, &transcript).map_err(|e| e.to_string())?;
    let rel = path
        .strip_prefix(&state.config.results_dir)
        .unwrap_or(&path)
        .to_string_lossy()
        .replace('\\', "/");
    Ok((transcript.outcome, rel))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Session>, ApiError> {
    let entry = state
        .entry(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session '{id}'")))?;
    Ok(Json(entry.shared.snapshot()))
}

async fn submit_response(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<SubmitResponse>,
) -> Result<Json<Session>, ApiError> {
    let entry = state
        .entry(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session '{id}'")))?;
    {
        let mut view = entry.shared.view.lock().expect("session lock poisoned");
        if view.status != SessionStatus::AwaitingHuman {
            let status = serde_json::to_value(view.status).expect("status serializes");
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("session is {}, not awaiting_human", status.as_str().unwrap_or("?")),
            ));
        }
        view.status = SessionStatus::AwaitingEngine;
        view.pending_prompt = None;
    }
    if let Err(e) = entry.bridge.submit(req.text) {
        return Err(ApiError::new(StatusCode::CONFLICT, e.to_string()));
    }
    let view = wait(entry.shared.clone(), state.config.engine_wait).await?;
    Ok(Json(view))
}

async fn leaderboard(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let dir = state.config.results_dir.clone();
    let reports = tokio::task::spawn_blocking(move || score_run(&dir, &ScoreOptions::default()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    match reports {
        Ok(reports) => Ok(Json(sort_leaderboard(&reports)).into_response()),
        Err(ScoreError::EmptyRun(_)) => Ok(Json(json!([])).into_response()),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

/// `rel` joined onto `root`, or `None` if it could leave `root`.
pub fn contained_path(root: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    if rel
        .components()
        .any(|c| !matches!(c, Component::Normal(_)))
    {
        return None;
    }
    Some(root.join(rel))
}

async fn transcript(
    State(state): State<Arc<AppState>>,
    UrlPath(path): UrlPath<String>,
) -> Result<Response, ApiError> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, format!("no transcript '{path}'"));
    let full = contained_path(&state.config.results_dir, &path).ok_or_else(not_found)?;
    if full.extension().is_none_or(|e| e != "json") {
        return Err(not_found());
    }
    let body = tokio::fs::read(&full).await.map_err(|_| not_found())?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traversal_is_rejected() {
        let root = Path::new("/results");
        assert!(contained_path(root, "../etc/passwd").is_none());
        assert!(contained_path(root, "a/../../b.json").is_none());
        assert!(contained_path(root, "/etc/passwd").is_none());
        assert_eq!(
            contained_path(root, "m/reference/default/0/transcript.json"),
            Some(PathBuf::from("/results/m/reference/default/0/transcript.json"))
        );
    }

    #[test]
    fn status_serializes_snake_case() {
        assert_eq!(
            serde_json::to_string(&SessionStatus::AwaitingHuman).unwrap(),
            "\"awaiting_human\""
        );
    }
}
