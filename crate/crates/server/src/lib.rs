//! Annotation campaign service.
//!
//! Votes go through one writer task that appends them to the event log
//! before applying them; readers share a snapshot behind an `RwLock`.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot, RwLock};

use foundry::annotate::{AnnotateError, Campaign, TaskStatus, VoteRecord, DEFAULT_GUIDELINES};
use foundry::cartography::{read_csv, Group};
use foundry::Relation;

/// Pair ids per cartography group, for `GET /api/agreement?group=`.
pub type GroupSets = BTreeMap<Group, HashSet<String>>;

#[derive(Clone)]
pub struct AppState {
    campaign: Arc<RwLock<Campaign>>,
    votes: mpsc::Sender<VoteCommand>,
    guidelines: Arc<str>,
    groups: Arc<Option<GroupSets>>,
}

struct VoteCommand {
    task_id: String,
    annotator: String,
    label: Relation,
    reply: oneshot::Sender<Result<VoteOutcome, ApiError>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub task_id: String,
    pub status: TaskStatus,
    pub votes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
}

impl From<AnnotateError> for ApiError {
    fn from(e: AnnotateError) -> Self {
        let status = match &e {
            AnnotateError::UnknownTask(_) | AnnotateError::UnknownAnnotator(_) => StatusCode::NOT_FOUND,
            AnnotateError::NotAssigned { .. } => StatusCode::FORBIDDEN,
            AnnotateError::DoubleVote { .. } | AnnotateError::Closed(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

pub struct ServiceConfig {
    pub guidelines: Option<String>,
    pub groups: Option<GroupSets>,
}

impl AppState {
    /// Starts the writer task. Every accepted vote is written as one line
    /// to `log` and flushed before the in-memory campaign changes.
    pub fn start<W: Write + Send + 'static>(campaign: Campaign, log: W, config: ServiceConfig) -> AppState {
        let campaign = Arc::new(RwLock::new(campaign));
        let (tx, rx) = mpsc::channel(256);
        tokio::spawn(writer(campaign.clone(), rx, log));
        AppState {
            campaign,
            votes: tx,
            guidelines: config.guidelines.unwrap_or_else(|| DEFAULT_GUIDELINES.to_string()).into(),
            groups: Arc::new(config.groups),
        }
    }

    pub async fn snapshot(&self) -> tokio::sync::RwLockReadGuard<'_, Campaign> {
        self.campaign.read().await
    }
}

async fn writer<W: Write>(campaign: Arc<RwLock<Campaign>>, mut rx: mpsc::Receiver<VoteCommand>, mut log: W) {
    while let Some(cmd) = rx.recv().await {
        let mut c = campaign.write().await;
        let result = apply_vote(&mut c, &mut log, &cmd);
        let _ = cmd.reply.send(result);
    }
}

fn apply_vote<W: Write>(c: &mut Campaign, log: &mut W, cmd: &VoteCommand) -> Result<VoteOutcome, ApiError> {
    c.check_vote(&cmd.task_id, &cmd.annotator)?;
    let rec = VoteRecord { task_id: cmd.task_id.clone(), annotator: cmd.annotator.clone(), label: cmd.label };
    let mut line = rec.to_json_line();
    line.push('\n');
    log.write_all(line.as_bytes())
        .and_then(|_| log.flush())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("event log append failed: {e}")))?;
    let task = c.submit(&cmd.task_id, &cmd.annotator, cmd.label)?;
    Ok(VoteOutcome { task_id: task.task_id.clone(), status: task.status, votes: task.labels.len() })
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/tasks/{task_id}/label", post(submit_label))
        .route("/api/progress", get(progress))
        .route("/api/agreement", get(agreement))
        .route("/api/export", get(export))
        .route("/api/guidelines", get(guidelines))
        .with_state(state)
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
}

async fn next_task(State(s): State<AppState>, Query(q): Query<NextQuery>) -> Result<Response, ApiError> {
    match s.campaign.read().await.next_task(&q.annotator)? {
        Some(view) => Ok(Json(view).into_response()),
        None => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

#[derive(Deserialize)]
struct LabelBody {
    annotator: String,
    label: Relation,
}

async fn submit_label(
    State(s): State<AppState>,
    UrlPath(task_id): UrlPath<String>,
    Json(body): Json<LabelBody>,
) -> Result<Json<VoteOutcome>, ApiError> {
    let (reply, rx) = oneshot::channel();
    let cmd = VoteCommand { task_id, annotator: body.annotator, label: body.label, reply };
    let gone = || ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "writer stopped");
    s.votes.send(cmd).await.map_err(|_| gone())?;
    rx.await.map_err(|_| gone())?.map(Json)
}

async fn progress(State(s): State<AppState>) -> Response {
    Json(s.campaign.read().await.progress()).into_response()
}

#[derive(Deserialize)]
struct AgreementQuery {
    group: Option<String>,
}

async fn agreement(State(s): State<AppState>, Query(q): Query<AgreementQuery>) -> Result<Response, ApiError> {
    let filter = match q.group.as_deref() {
        None => None,
        Some(name) => {
            let group = Group::parse(name).ok_or_else(|| {
                ApiError::new(StatusCode::BAD_REQUEST, format!("unknown group {name:?} (E2L, A, H2L)"))
            })?;
            let sets = s
                .groups
                .as_ref()
                .as_ref()
                .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "no group file loaded"))?;
            Some(sets.get(&group).cloned().unwrap_or_default())
        }
    };
    Ok(Json(s.campaign.read().await.agreement(filter.as_ref())).into_response())
}

async fn export(State(s): State<AppState>) -> Response {
    let mut body = String::new();
    for row in s.campaign.read().await.export() {
        body.push_str(&serde_json::to_string(&row).expect("row serializes"));
        body.push('\n');
    }
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

async fn guidelines(State(s): State<AppState>) -> Response {
    ([(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], s.guidelines.to_string()).into_response()
}

/// Group membership from a cartography CSV.
pub fn load_groups(path: &Path) -> Result<GroupSets, Box<dyn std::error::Error + Send + Sync>> {
    let points = read_csv(std::fs::File::open(path)?)?;
    let mut sets: GroupSets = Group::ALL.iter().map(|g| (*g, HashSet::new())).collect();
    for p in points {
        for g in &p.groups {
            sets.entry(*g).or_default().insert(p.example_id.clone());
        }
    }
    Ok(sets)
}

/// Replays `campaign_path` and opens it for appending. A torn last line
/// (partial write) is cut off so later votes start on a clean line.
pub fn open_campaign(
    campaign_path: &Path,
) -> Result<(Campaign, std::fs::File), Box<dyn std::error::Error + Send + Sync>> {
    let campaign = Campaign::replay(std::io::BufReader::new(std::fs::File::open(campaign_path)?))?;
    let text = std::fs::read(campaign_path)?;
    let mut file = std::fs::OpenOptions::new().append(true).open(campaign_path)?;
    if !text.is_empty() && !text.ends_with(b"\n") {
        let start = text.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        if serde_json::from_slice::<serde_json::Value>(&text[start..]).is_ok() {
            file.write_all(b"\n")?;
        } else {
            log::warn!("dropping torn last line of {}", campaign_path.display());
            file.set_len(start as u64)?;
        }
    }
    Ok((campaign, file))
}

/// Serves until the process ends.
pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
