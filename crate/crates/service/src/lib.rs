//! HTTP sessions for live play against an engine tactic, with solver hints.
//!
//! Four endpoints, all JSON:
//!
//! * `POST /sessions` creates a session from a construction spec or an
//!   inline `.cake` text.
//! * `GET /sessions/{id}` returns the current view.
//! * `POST /sessions/{id}/moves` applies the human's move and the engine's
//!   reply.
//! * `GET /sessions/{id}/hint` returns the optimal moves and the value for
//!   the player to move.
//!
//! Coordinates and weights travel as decimal strings.

use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::{Arc, Mutex as StdMutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use convex_grab::cake::Cake as GenericCake;
use convex_grab::constructions::{Annotation, ConstructionSpec, DEFAULT_SCALE};
use convex_grab::engine::{GameState, Tactic};
use convex_grab::tactics::resolve_tactic;
use convex_grab::{Cake, Gameplay, Player, Solver, SubsetMask, Weight};
use lru::LruCache;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::services::ServeDir;
use uuid::Uuid;

pub const DEFAULT_SOLVER_CAP: usize = 16;
pub const DEFAULT_MAX_SESSIONS: usize = 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Largest cake the solver runs on, for hints and the `optimal` engine.
    pub solver_cap: usize,
    /// Least recently used sessions are dropped beyond this count.
    pub max_sessions: usize,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            solver_cap: DEFAULT_SOLVER_CAP,
            max_sessions: DEFAULT_MAX_SESSIONS,
            static_dir: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown session {0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    TooLarge(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::TooLarge(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    /// A construction spec such as `moon:4`.
    #[serde(default)]
    pub construct: Option<String>,
    /// An inline cake in the `.cake` text format.
    #[serde(default)]
    pub cake: Option<String>,
    /// Optional annotation text for an inline cake.
    #[serde(default)]
    pub annotation: Option<String>,
    pub human_plays: String,
    #[serde(default = "default_engine")]
    pub engine: String,
}

fn default_engine() -> String {
    "simple-greedy".into()
}

#[derive(Debug, Clone, Deserialize)]
pub struct MoveRequest {
    pub cherry: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CherryView {
    pub id: usize,
    pub x: String,
    pub y: String,
    pub weight: String,
    pub color: String,
    pub taken_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub alice: String,
    pub bob: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub human_plays: String,
    pub engine: String,
    pub cherries: Vec<CherryView>,
    pub extremal: Vec<usize>,
    pub mover: Option<String>,
    pub moves: Vec<usize>,
    pub scores: Scores,
    pub game_over: bool,
    pub last_engine_move: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintView {
    pub mover: String,
    pub value: String,
    pub optimal_moves: Vec<usize>,
}

struct Session {
    id: Uuid,
    cake: Cake,
    gameplay: Gameplay,
    human: Player,
    engine_name: String,
    engine: Box<dyn Tactic<Weight>>,
    last_engine_move: Option<usize>,
    solver: Option<Arc<Solver>>,
}

impl Session {
    fn remaining(&self) -> SubsetMask {
        self.gameplay
            .moves
            .iter()
            .fold(self.cake.full(), |m, &id| m.without(id))
    }

    fn mover(&self) -> Player {
        if self.gameplay.moves.len() % 2 == 0 {
            Player::Alice
        } else {
            Player::Bob
        }
    }

    fn state(&self) -> GameState<'_, Weight> {
        GameState::at(self.cake.board(), self.remaining(), self.mover())
            .expect("session gameplay follows the turn order")
    }

    /// Plays engine moves until it is the human's turn or the game ends.
    fn engine_turns(&mut self) -> Result<(), ApiError> {
        loop {
            let state = self.state();
            if state.is_over() || state.mover() == self.human {
                return Ok(());
            }
            let id = convex_grab::engine::consult(self.engine.as_ref(), &state)
                .map_err(|e| ApiError::Internal(format!("engine failed: {e}")))?;
            self.gameplay.moves.push(id);
            self.last_engine_move = Some(id);
        }
    }

    fn view(&self) -> SessionView {
        let board = self.cake.board();
        let state = self.state();
        let mut taken_by = vec![None; self.cake.len()];
        let mut alice = Weight::from_integer(0);
        let mut bob = Weight::from_integer(0);
        for (i, &id) in self.gameplay.moves.iter().enumerate() {
            let w = *board.weight(id);
            if i % 2 == 0 {
                alice += w;
                taken_by[id] = Some(Player::Alice.to_string());
            } else {
                bob += w;
                taken_by[id] = Some(Player::Bob.to_string());
            }
        }
        let cherries = self
            .cake
            .cherries()
            .iter()
            .map(|c| CherryView {
                id: c.id,
                x: c.point.x.to_string(),
                y: c.point.y.to_string(),
                weight: c.weight.to_string(),
                color: if board.is_red(c.id) { "red" } else { "green" }.into(),
                taken_by: taken_by[c.id].clone(),
            })
            .collect();
        let over = state.is_over();
        SessionView {
            id: self.id.to_string(),
            human_plays: self.human.to_string(),
            engine: self.engine_name.clone(),
            cherries,
            extremal: if over {
                Vec::new()
            } else {
                board.extremal(state.remaining()).to_vec()
            },
            mover: (!over).then(|| state.mover().to_string()),
            moves: self.gameplay.moves.clone(),
            scores: Scores {
                alice: alice.to_string(),
                bob: bob.to_string(),
            },
            game_over: over,
            last_engine_move: self.last_engine_move,
        }
    }
}

type Sessions = LruCache<Uuid, Arc<Mutex<Session>>>;

/// Shared service state: the session table and the configuration.
#[derive(Clone)]
pub struct AppState {
    sessions: Arc<StdMutex<Sessions>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        let cap = NonZeroUsize::new(config.max_sessions.max(1)).expect("positive");
        AppState {
            sessions: Arc::new(StdMutex::new(LruCache::new(cap))),
            config: Arc::new(config),
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session table").len()
    }

    fn lookup(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let key = Uuid::parse_str(id).map_err(|_| ApiError::NotFound(id.into()))?;
        self.sessions
            .lock()
            .expect("session table")
            .get(&key)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(id.into()))
    }
}

fn load_cake(req: &CreateSession) -> Result<(Cake, Option<Annotation>), ApiError> {
    match (&req.construct, &req.cake) {
        (Some(spec), None) => {
            let spec: ConstructionSpec = spec
                .parse()
                .map_err(|e| ApiError::BadRequest(format!("{e}")))?;
            spec.build(DEFAULT_SCALE)
                .map_err(|e| ApiError::BadRequest(format!("{e}")))
        }
        (None, Some(text)) => {
            let cake = GenericCake::parse(text)
                .map_err(|e| ApiError::BadRequest(format!("bad cake: {e}")))?;
            let ann = req
                .annotation
                .as_deref()
                .map(Annotation::parse)
                .transpose()
                .map_err(|e| ApiError::BadRequest(format!("{e}")))?;
            Ok((cake, ann))
        }
        _ => Err(ApiError::BadRequest(
            "give exactly one of `construct` and `cake`".into(),
        )),
    }
}

async fn create_session(
    State(app): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let human: Player = req.human_plays.parse().map_err(ApiError::BadRequest)?;
    let cap = app.config.solver_cap;
    // Building a sun and running the engine's opening move can take a while.
    let session = tokio::task::spawn_blocking(move || {
        let (cake, ann) = load_cake(&req)?;
        let needs_solver = req.engine == "optimal";
        if needs_solver && cake.len() > cap {
            return Err(ApiError::TooLarge(format!(
                "the optimal engine is limited to {cap} cherries, this cake has {}",
                cake.len()
            )));
        }
        if req.engine == "careful-greedy" && human == Player::Bob {
            return Err(ApiError::BadRequest(
                "careful-greedy is a tactic for Bob; play Alice against it".into(),
            ));
        }
        let engine = resolve_tactic(&req.engine, cake.board(), ann.as_ref().and_then(|a| a.sun()))
            .map_err(|e| ApiError::BadRequest(e.to_string()))?;
        let mut session = Session {
            id: Uuid::new_v4(),
            cake,
            gameplay: Gameplay::default(),
            human,
            engine_name: req.engine.clone(),
            engine,
            last_engine_move: None,
            solver: None,
        };
        session.engine_turns()?;
        Ok::<_, ApiError>(session)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    let view = session.view();
    app.sessions
        .lock()
        .expect("session table")
        .put(session.id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let session = app.lookup(&id)?;
    let session = session.lock().await;
    Ok(Json(session.view()))
}

async fn post_move(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<MoveRequest>,
) -> Result<Json<SessionView>, ApiError> {
    let session = app.lookup(&id)?;
    let mut session = session.lock_owned().await;
    let view = tokio::task::spawn_blocking(move || {
        let state = session.state();
        if state.is_over() {
            return Err(ApiError::Conflict("the game is over".into()));
        }
        if state.mover() != session.human {
            return Err(ApiError::Conflict("not your turn".into()));
        }
        state
            .check_move(req.cherry)
            .map_err(|e| ApiError::Conflict(e.to_string()))?;
        session.gameplay.moves.push(req.cherry);
        session.last_engine_move = None;
        session.engine_turns()?;
        Ok(session.view())
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(view))
}

async fn hint(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<HintView>, ApiError> {
    let session = app.lookup(&id)?;
    let mut session = session.lock_owned().await;
    let cap = app.config.solver_cap;
    let hint = tokio::task::spawn_blocking(move || {
        let n = session.cake.len();
        if n > cap {
            return Err(ApiError::TooLarge(format!(
                "hints are limited to {cap} cherries, this cake has {n}"
            )));
        }
        let state = session.state();
        if state.is_over() {
            return Err(ApiError::Conflict("the game is over".into()));
        }
        let board = session.cake.board().clone();
        let solver = session
            .solver
            .get_or_insert_with(|| Arc::new(Solver::new(board)))
            .clone();
        let state = session.state();
        let record = solver
            .record(&state)
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok(HintView {
            mover: state.mover().to_string(),
            value: record.value.to_string(),
            optimal_moves: record.optimal_moves.to_vec(),
        })
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(hint))
}

pub fn router(app: AppState) -> Router {
    let static_dir = app.config.static_dir.clone();
    let router = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/moves", post(post_move))
        .route("/sessions/:id/hint", get(hint))
        .with_state(app);
    match static_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config))).await
}
