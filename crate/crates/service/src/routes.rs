use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use serde_json::{json, Value};
use vrptw_core::constraints::{Conflict, ConstraintError};
use vrptw_core::fixtures::SeedQuality;
use vrptw_core::provenance::{load_session, save_session, GalleryKey, HistoryGraph, Origin, RecordId};
use vrptw_core::solver::{generate_diverse_observed, JobKind, SolveJob, SolveRequest, Silent};
use vrptw_core::{
    parse_solomon, InstanceDocument, ProblemInstance, SideConstraints, Solution, SolveBudget, SolveStatus,
};

use crate::error::{ApiError, ApiResult};
use crate::state::{is_terminal, lock, AppState, JobEntry, Session, Slot, Viewport};
use crate::views::{gallery_view, history_view, session_view, viewport_view, RecordView};

type Shared = State<Arc<AppState>>;

const INFEASIBLE_PREFIX: &str =
    "the optimisation solver could not re-optimise the current solution due to conflicting constraints";

/// Longest a long-poll request waits for a new event.
const POLL_WAIT: Duration = Duration::from_secs(10);

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/fixtures", get(list_fixtures))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/viewports/{viewport}", get(get_viewport))
        .route("/sessions/{id}/viewports/{viewport}/load", post(load_viewport))
        .route("/sessions/{id}/viewports/{viewport}/edit", post(edit_solution))
        .route("/sessions/{id}/viewports/{viewport}/constraints", post(edit_constraints))
        .route("/sessions/{id}/viewports/{viewport}/reoptimise", post(start_reoptimise))
        .route("/sessions/{id}/history", get(get_history))
        .route("/sessions/{id}/gallery", get(get_gallery).post(update_gallery))
        .route("/sessions/{id}/export", get(export_session))
        .route("/records/{id}/bookmark", post(bookmark))
        .route("/records/{id}/rename", post(rename))
        .route("/jobs/{id}/events", get(job_events))
        .route("/jobs/{id}/cancel", post(cancel_job))
        .with_state(state)
}

async fn list_fixtures(State(state): Shared) -> Json<Value> {
    Json(json!({ "fixtures": state.fixture_names() }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    fixture: Option<String>,
    instance: Option<InstanceDocument>,
    solomon: Option<String>,
    /// A previously exported session document.
    session: Option<Value>,
    seed_count: Option<usize>,
    margin: Option<f64>,
    quality: Option<SeedQuality>,
    #[serde(default)]
    seed: u64,
    budget: Option<SolveBudget>,
}

async fn create_session(State(state): Shared, Json(body): Json<CreateSession>) -> ApiResult<Response> {
    let sources = [
        body.fixture.is_some(),
        body.instance.is_some(),
        body.solomon.is_some(),
        body.session.is_some(),
    ];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(ApiError::usage(
            "give exactly one of fixture, instance, solomon or session",
        ));
    }

    if let Some(doc) = body.session {
        let (instance, history) = load_session(&doc.to_string())?;
        let first = history.records().first().map(|r| r.record_id);
        let session = state.insert_session(|id| Session {
            id,
            fixture: None,
            metadata: None,
            instance: Arc::new(instance),
            history,
            seeded: Vec::new(),
            seeding_note: None,
            viewports: [
                Slot {
                    record: first,
                    job: None,
                },
                Slot::default(),
            ],
        });
        let view = session_view(&lock(&session));
        return Ok((StatusCode::CREATED, Json(view)).into_response());
    }

    let (name, instance, metadata) = if let Some(name) = body.fixture {
        let fixture = state.fixture(&name)?;
        (Some(name), fixture.instance.clone(), Some(fixture.metadata.clone()))
    } else if let Some(doc) = body.instance {
        (None, doc.into_instance()?, None)
    } else {
        (None, parse_solomon(body.solomon.as_deref().unwrap_or_default())?, None)
    };
    let seeding = metadata.as_ref().map(|m| m.seeding).unwrap_or_default();
    let count = body.seed_count.unwrap_or(seeding.count);
    let margin = body.margin.unwrap_or(seeding.margin);
    let quality = body.quality.unwrap_or(seeding.quality);
    let budget = body
        .budget
        .unwrap_or_else(|| SolveBudget::interactive(body.seed).with_wall_time(state.config.seeding_budget));
    let instance = Arc::new(instance);

    let seeded_instance = instance.clone();
    let initial = metadata.as_ref().and_then(|m| m.initial_routes.clone());
    let (solutions, note) = tokio::task::spawn_blocking(move || seed_solutions(&seeded_instance, initial, count, margin, quality, &budget))
        .await
        .map_err(|e| ApiError::state(format!("seeding task failed: {e}")))??;

    let mut history = HistoryGraph::new();
    let constraints = SideConstraints::new();
    let mut seeded = Vec::new();
    for solution in &solutions {
        seeded.push(history.append(solution, &constraints, [], Origin::Seeded)?);
    }
    let session = state.insert_session(|id| Session {
        id,
        fixture: name,
        metadata,
        instance,
        history,
        seeded: seeded.clone(),
        seeding_note: note,
        viewports: [
            Slot {
                record: seeded.first().copied(),
                job: None,
            },
            Slot::default(),
        ],
    });
    let view = session_view(&lock(&session));
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

fn seed_solutions(
    instance: &ProblemInstance,
    initial: Option<Vec<Vec<String>>>,
    count: usize,
    margin: f64,
    quality: SeedQuality,
    budget: &SolveBudget,
) -> ApiResult<(Vec<Solution>, Option<String>)> {
    let constraints = SideConstraints::new();
    if let Some(routes) = initial {
        let routes = routes
            .iter()
            .map(|r| r.iter().map(|l| customer_index(instance, l)).collect::<ApiResult<Vec<_>>>())
            .collect::<ApiResult<Vec<_>>>()?;
        return Ok((vec![Solution::new(instance, routes, &constraints)?], None));
    }
    let outcome = generate_diverse_observed(instance, &constraints, count, margin, quality, budget, &mut Silent)?;
    Ok((outcome.solutions, outcome.shortfall))
}

fn customer_index(instance: &ProblemInstance, label: &str) -> ApiResult<usize> {
    instance
        .customer_by_label(label)
        .ok_or_else(|| ApiError::usage(format!("unknown customer '{label}'")))
}

fn required<T>(value: Option<T>, field: &str) -> ApiResult<T> {
    value.ok_or_else(|| ApiError::usage(format!("missing field '{field}'")))
}

async fn get_session(State(state): Shared, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    let session = state.session(id)?;
    let view = session_view(&lock(&session));
    Ok(Json(json!(view)))
}

async fn get_viewport(State(state): Shared, Path((id, viewport)): Path<(u64, String)>) -> ApiResult<Json<Value>> {
    let viewport = Viewport::parse(&viewport)?;
    let session = state.session(id)?;
    let view = viewport_view(&lock(&session), viewport);
    Ok(Json(json!(view)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadBody {
    record_id: RecordId,
}

async fn load_viewport(
    State(state): Shared,
    Path((id, viewport)): Path<(u64, String)>,
    Json(body): Json<LoadBody>,
) -> ApiResult<Json<Value>> {
    let viewport = Viewport::parse(&viewport)?;
    let session = state.session(id)?;
    let mut session = lock(&session);
    if session.viewports[viewport.index()].job.is_some() {
        return Err(ApiError::busy());
    }
    if session.history.get(body.record_id).is_none() {
        return Err(ApiError::not_found(format!("record {} does not exist", body.record_id)));
    }
    session.slot(viewport).record = Some(body.record_id);
    Ok(Json(json!(viewport_view(&session, viewport))))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EditBody {
    customer: String,
    target_vehicle: usize,
    target_position: usize,
}

async fn edit_solution(
    State(state): Shared,
    Path((id, viewport)): Path<(u64, String)>,
    Json(body): Json<EditBody>,
) -> ApiResult<Json<Value>> {
    let viewport = Viewport::parse(&viewport)?;
    let session = state.session(id)?;
    let mut session = lock(&session);
    let parent = session.idle_record(viewport)?;
    let record = session.history.get(parent).expect("viewport record exists");
    let customer = customer_index(&session.instance, &body.customer)?;
    let constraints = record.constraints.clone();
    let moved = record.solution.with_move(
        &session.instance,
        &constraints,
        customer,
        body.target_vehicle,
        body.target_position,
    )?;
    let child = session.history.append(&moved, &constraints, [parent], Origin::ManualEdit)?;
    session.slot(viewport).record = Some(child);
    Ok(Json(json!(viewport_view(&session, viewport))))
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ConstraintOp {
    AddLock,
    RemoveLock,
    AddOrder,
    RemoveOrder,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintBody {
    op: ConstraintOp,
    customer: Option<String>,
    vehicle: Option<usize>,
    before: Option<String>,
    after: Option<String>,
}

async fn edit_constraints(
    State(state): Shared,
    Path((id, viewport)): Path<(u64, String)>,
    Json(body): Json<ConstraintBody>,
) -> ApiResult<Json<Value>> {
    let viewport = Viewport::parse(&viewport)?;
    let session = state.session(id)?;
    let mut session = lock(&session);
    let parent = session.idle_record(viewport)?;
    let instance = session.instance.clone();
    let record = session.history.get(parent).expect("viewport record exists");
    let mut constraints = record.constraints.clone();
    let label = |field: Option<&String>, name: &str| -> ApiResult<usize> {
        customer_index(&instance, required(field, name)?)
    };
    let edit = match body.op {
        ConstraintOp::AddLock => {
            let customer = label(body.customer.as_ref(), "customer")?;
            constraints.add_lock(&instance, customer, required(body.vehicle, "vehicle")?)
        }
        ConstraintOp::RemoveLock => {
            let customer = label(body.customer.as_ref(), "customer")?;
            constraints.remove_lock(customer)
        }
        ConstraintOp::AddOrder => {
            let (before, after) = (label(body.before.as_ref(), "before")?, label(body.after.as_ref(), "after")?);
            constraints.add_order(&instance, before, after)
        }
        ConstraintOp::RemoveOrder => {
            let (before, after) = (label(body.before.as_ref(), "before")?, label(body.after.as_ref(), "after")?);
            constraints.remove_order(before, after)
        }
    };
    edit.map_err(|e| constraint_error(&instance, e))?;
    let solution = record.solution.with_constraints(&instance, &constraints);
    let child = session
        .history
        .append(&solution, &constraints, [parent], Origin::ConstraintChange)?;
    session.slot(viewport).record = Some(child);
    Ok(Json(json!(viewport_view(&session, viewport))))
}

fn constraint_error(instance: &ProblemInstance, error: ConstraintError) -> ApiError {
    match error {
        ConstraintError::Usage(message) => ApiError::usage(message),
        ConstraintError::Conflict { conflict, message } => {
            let detail = match conflict {
                Conflict::Cycle { path } => json!({
                    "kind": "cycle",
                    "path": path.iter().map(|&c| instance.label(c)).collect::<Vec<_>>(),
                }),
                Conflict::LockClash {
                    before,
                    after,
                    before_vehicle,
                    after_vehicle,
                } => json!({
                    "kind": "lock_clash",
                    "before": instance.label(before),
                    "after": instance.label(after),
                    "before_vehicle": before_vehicle,
                    "after_vehicle": after_vehicle,
                }),
            };
            let mut error = ApiError::new(StatusCode::CONFLICT, "constraint_conflict", message);
            error.detail = Some(detail);
            error
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReoptimiseBody {
    budget: Option<SolveBudget>,
}

async fn start_reoptimise(
    State(state): Shared,
    Path((id, viewport)): Path<(u64, String)>,
    body: Option<Json<ReoptimiseBody>>,
) -> ApiResult<Response> {
    let viewport = Viewport::parse(&viewport)?;
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let budget = body
        .budget
        .unwrap_or_else(|| SolveBudget::interactive(0).with_wall_time(state.config.reoptimise_budget));
    budget.validate()?;
    let session_handle = state.session(id)?;
    let (job, entry) = {
        let mut session = lock(&session_handle);
        let parent = session.idle_record(viewport)?;
        let record = session.history.get(parent).expect("viewport record exists");
        let request = SolveRequest {
            kind: JobKind::Reoptimise,
            instance: session.instance.clone(),
            constraints: record.constraints.clone(),
            start: record.solution.clone(),
            budget,
        };
        let job = SolveJob::spawn(request);
        let entry = Arc::new(JobEntry::new(state.next_job_id(), id, viewport, job.cancel_handle()));
        state.insert_job(entry.clone());
        session.slot(viewport).job = Some(entry.id);
        (job, (entry, parent))
    };
    let (entry, parent) = entry;
    let job_id = entry.id;
    tokio::task::spawn_blocking(move || run_job(job, &entry, &session_handle, viewport, parent));
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": job_id }))).into_response())
}

fn run_job(
    job: SolveJob,
    entry: &JobEntry,
    session: &std::sync::Mutex<Session>,
    viewport: Viewport,
    parent: RecordId,
) {
    let mut terminal = None;
    for event in job.events().iter() {
        let mut value = json!(event);
        value["job_id"] = json!(entry.id);
        if event.is_terminal() {
            terminal = Some(value);
            break;
        }
        entry.push(value);
    }
    let outcome = job.wait();
    let mut terminal = terminal.unwrap_or_else(|| json!({ "phase": "finished", "job_id": entry.id }));
    let mut session = lock(session);
    session.slot(viewport).job = None;
    match outcome {
        Ok(outcome) => {
            terminal["status"] = json!(outcome.status);
            let keep = matches!(outcome.status, SolveStatus::Improved | SolveStatus::Unchanged);
            if let (true, Some(solution)) = (keep, &outcome.solution) {
                let constraints = session.history.get(parent).expect("parent exists").constraints.clone();
                match session.history.append(solution, &constraints, [parent], Origin::Reoptimised) {
                    Ok(child) => {
                        session.slot(viewport).record = Some(child);
                        terminal["record_id"] = json!(child);
                        terminal["objective"] = json!(solution.objective());
                    }
                    Err(e) => terminal["message"] = json!(e.to_string()),
                }
            }
            if outcome.status == SolveStatus::InfeasibleConstraints {
                let witness = outcome.message.unwrap_or_default();
                terminal["message"] = json!(format!("{INFEASIBLE_PREFIX}: {witness}"));
            }
        }
        Err(e) => {
            terminal["status"] = json!("error");
            terminal["message"] = json!(e.to_string());
        }
    }
    drop(session);
    entry.push(terminal);
}

#[derive(Debug, Default, Deserialize)]
struct EventsQuery {
    mode: Option<String>,
    #[serde(default)]
    since: usize,
}

async fn job_events(
    State(state): Shared,
    Path(id): Path<u64>,
    Query(query): Query<EventsQuery>,
) -> ApiResult<Response> {
    let job = state.job(id)?;
    match query.mode.as_deref() {
        None | Some("stream") => Ok(Sse::new(event_stream(job, query.since))
            .keep_alive(KeepAlive::default())
            .into_response()),
        Some("poll") => Ok(Json(poll_events(&job, query.since).await).into_response()),
        Some(other) => Err(ApiError::usage(format!("unknown mode '{other}'"))),
    }
}

fn event_stream(job: Arc<JobEntry>, since: usize) -> impl Stream<Item = Result<Event, Infallible>> {
    let changes = job.subscribe();
    stream::unfold(Some((job, since, changes)), |state| async move {
        let (job, since, mut changes) = state?;
        loop {
            let batch = job.events_from(since);
            if !batch.is_empty() {
                let next = since + batch.len();
                let done = batch.last().is_some_and(is_terminal);
                let events: Vec<Result<Event, Infallible>> = batch
                    .iter()
                    .enumerate()
                    .map(|(i, e)| Ok(Event::default().id((since + i).to_string()).json_data(e).expect("json event")))
                    .collect();
                let rest = (!done).then_some((job, next, changes));
                return Some((stream::iter(events), rest));
            }
            if changes.changed().await.is_err() {
                return None;
            }
        }
    })
    .flatten()
}

async fn poll_events(job: &JobEntry, since: usize) -> Value {
    let mut changes = job.subscribe();
    let mut events = job.events_from(since);
    if events.is_empty() && !job.finished() {
        let _ = tokio::time::timeout(POLL_WAIT, changes.changed()).await;
        events = job.events_from(since);
    }
    json!({
        "events": events,
        "next": since + events.len(),
        "done": job.finished(),
    })
}

async fn cancel_job(State(state): Shared, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    let job = state.job(id)?;
    job.cancel.store(true, std::sync::atomic::Ordering::Relaxed);
    Ok(Json(json!({ "job_id": id, "cancelling": !job.finished() })))
}

async fn get_history(State(state): Shared, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    let session = state.session(id)?;
    let view = history_view(&lock(&session).history);
    Ok(Json(json!(view)))
}

async fn get_gallery(State(state): Shared, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    let session = state.session(id)?;
    let session = lock(&session);
    Ok(Json(json!(gallery_view(&session.instance, &session.history))))
}

#[derive(Debug, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
enum GalleryAction {
    Reorder { key: GalleryKey },
    Move { record_id: RecordId, position: usize },
    SetOrder { order: Vec<RecordId> },
}

async fn update_gallery(
    State(state): Shared,
    Path(id): Path<u64>,
    Json(action): Json<GalleryAction>,
) -> ApiResult<Json<Value>> {
    let session = state.session(id)?;
    let mut session = lock(&session);
    match action {
        GalleryAction::Reorder { key } => session.history.reorder_gallery(key),
        GalleryAction::Move { record_id, position } => session.history.move_in_gallery(record_id, position)?,
        GalleryAction::SetOrder { order } => session.history.set_gallery_order(&order)?,
    }
    Ok(Json(json!(gallery_view(&session.instance, &session.history))))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BookmarkBody {
    session_id: u64,
    bookmarked: bool,
}

async fn bookmark(
    State(state): Shared,
    Path(id): Path<u64>,
    Json(body): Json<BookmarkBody>,
) -> ApiResult<Json<Value>> {
    let session = state.session(body.session_id)?;
    let mut session = lock(&session);
    let instance = session.instance.clone();
    let record = session.history.bookmark(RecordId(id), body.bookmarked)?;
    Ok(Json(json!(RecordView::new(&instance, record))))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RenameBody {
    session_id: u64,
    name: String,
}

async fn rename(State(state): Shared, Path(id): Path<u64>, Json(body): Json<RenameBody>) -> ApiResult<Json<Value>> {
    let session = state.session(body.session_id)?;
    let mut session = lock(&session);
    let instance = session.instance.clone();
    let record = session.history.rename(RecordId(id), &body.name)?;
    Ok(Json(json!(RecordView::new(&instance, record))))
}

async fn export_session(State(state): Shared, Path(id): Path<u64>) -> ApiResult<Response> {
    let session = state.session(id)?;
    let text = {
        let session = lock(&session);
        save_session(&session.instance, &session.history)
    };
    Ok(([(axum::http::header::CONTENT_TYPE, "application/json")], text).into_response())
}
