//! HTTP preview service.
//!
//! Renders run one at a time behind a mutex. A semaphore with
//! `1 + queue_depth` permits bounds how many requests may be rendering or
//! waiting; anything beyond that is turned away with 429 straight away.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nimbus::scene::{apply_overrides, bounds, parse_json, preset, presets, ConfigError};
use nimbus::SceneConfig;
use serde_json::{json, Map, Value};
use tokio::sync::{Mutex, Semaphore};

use crate::output::{diff_png, render_png, Rendered};

pub const DEFAULT_QUEUE_DEPTH: usize = 4;
pub const MAX_PREVIEW_SCALE: u32 = 8;

pub const RENDER_TIME_HEADER: &str = "x-render-time-ms";
pub const SAMPLES_HEADER: &str = "x-extinction-samples";

#[derive(Clone)]
pub struct AppState {
    slots: Arc<Semaphore>,
    render_lock: Arc<Mutex<()>>,
    base_dir: Option<PathBuf>,
}

impl AppState {
    /// `base_dir` anchors relative texture paths in request bodies.
    pub fn new(queue_depth: usize, base_dir: Option<PathBuf>) -> Self {
        Self {
            slots: Arc::new(Semaphore::new(1 + queue_depth)),
            render_lock: Arc::new(Mutex::new(())),
            base_dir,
        }
    }

    /// Admission semaphore; exposed so tests can fill the queue.
    pub fn slots(&self) -> Arc<Semaphore> {
        self.slots.clone()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/presets", get(list_presets))
        .route("/bounds", get(list_bounds))
        .route("/render", post(render).options(preflight))
        .route("/diff", post(diff).options(preflight))
        .layer(axum::middleware::map_response(cors))
        .with_state(state)
}

async fn cors(mut res: Response) -> Response {
    let h = res.headers_mut();
    h.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, HeaderValue::from_static("*"));
    h.insert(
        header::ACCESS_CONTROL_EXPOSE_HEADERS,
        HeaderValue::from_static("x-render-time-ms, x-extinction-samples"),
    );
    res
}

async fn preflight() -> Response {
    (
        StatusCode::NO_CONTENT,
        [
            (header::ACCESS_CONTROL_ALLOW_METHODS, HeaderValue::from_static("GET, POST, OPTIONS")),
            (header::ACCESS_CONTROL_ALLOW_HEADERS, HeaderValue::from_static("content-type")),
        ],
    )
        .into_response()
}

async fn list_presets() -> Json<Value> {
    Json(serde_json::to_value(presets()).expect("presets serialize"))
}

async fn list_bounds() -> Json<Value> {
    Json(serde_json::to_value(bounds()).expect("bounds serialize"))
}

fn bad_request(err: &ConfigError) -> Response {
    (StatusCode::BAD_REQUEST, Json(err.to_json())).into_response()
}

fn overloaded() -> Response {
    (
        StatusCode::TOO_MANY_REQUESTS,
        Json(json!({"error": "overloaded", "message": "render queue is full"})),
    )
        .into_response()
}

fn internal(message: String) -> Response {
    (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "internal", "message": message}))).into_response()
}

fn take_preview_scale(obj: &mut Map<String, Value>) -> Result<u32, ConfigError> {
    let invalid = |v: &Value| ConfigError::Validation {
        path: "preview_scale".into(),
        message: format!("must be an integer within [1, {MAX_PREVIEW_SCALE}], got {v}"),
    };
    match obj.remove("preview_scale") {
        None => Ok(1),
        Some(v) => match v.as_u64() {
            Some(s) if (1..=MAX_PREVIEW_SCALE as u64).contains(&s) => Ok(s as u32),
            _ => Err(invalid(&v)),
        },
    }
}

/// Turns one override object (optionally naming a `preset` to start from)
/// into a validated scene. Error paths are prefixed with `prefix`.
fn scene_from(value: Value, prefix: &str) -> Result<SceneConfig, ConfigError> {
    let with_prefix = |e: ConfigError| match e {
        ConfigError::Validation { path, message } if !prefix.is_empty() => ConfigError::Validation {
            path: if path.is_empty() { prefix.to_string() } else { format!("{prefix}.{path}") },
            message,
        },
        other => other,
    };
    let Value::Object(mut obj) = value else {
        return Err(with_prefix(ConfigError::Validation {
            path: String::new(),
            message: "scene must be a JSON object".into(),
        }));
    };
    let base = match obj.remove("preset") {
        None => SceneConfig::default(),
        Some(Value::String(name)) => preset(&name)?.scenes.swap_remove(0),
        Some(other) => {
            return Err(with_prefix(ConfigError::Validation {
                path: "preset".into(),
                message: format!("must be a preset name, got {other}"),
            }))
        }
    };
    apply_overrides(&base, Value::Object(obj)).map_err(with_prefix)
}

fn parse_object(body: &Bytes) -> Result<Map<String, Value>, ConfigError> {
    match parse_json(body)? {
        Value::Object(obj) => Ok(obj),
        _ => Err(ConfigError::Validation {
            path: String::new(),
            message: "request body must be a JSON object".into(),
        }),
    }
}

/// Body: scene overrides plus optional `preview_scale` (1..=8) and `preset`.
pub fn parse_render_request(body: &Bytes) -> Result<SceneConfig, ConfigError> {
    let mut obj = parse_object(body)?;
    let scale = take_preview_scale(&mut obj)?;
    Ok(scene_from(Value::Object(obj), "")?.preview(scale))
}

/// Body: `{"left": overrides, "right": overrides, "preview_scale": n}`.
pub fn parse_diff_request(body: &Bytes) -> Result<(SceneConfig, SceneConfig), ConfigError> {
    let mut obj = parse_object(body)?;
    let scale = take_preview_scale(&mut obj)?;
    let mut side = |key: &str| {
        let v = obj.remove(key).unwrap_or_else(|| Value::Object(Map::new()));
        scene_from(v, key).map(|s| s.preview(scale))
    };
    let (left, right) = (side("left")?, side("right")?);
    if let Some(extra) = obj.keys().next() {
        return Err(ConfigError::Validation {
            path: extra.clone(),
            message: "unknown field, expected `left`, `right` or `preview_scale`".into(),
        });
    }
    Ok((left, right))
}

fn png_response(r: Rendered) -> Response {
    let ms = format!("{:.3}", r.elapsed.as_secs_f64() * 1e3);
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("image/png")),
            (header::HeaderName::from_static(RENDER_TIME_HEADER), HeaderValue::from_str(&ms).expect("ascii")),
            (header::HeaderName::from_static(SAMPLES_HEADER), HeaderValue::from(r.extinction_samples)),
        ],
        r.png,
    )
        .into_response()
}

/// Waits for the render slot, then runs `job` on the blocking pool.
async fn run_exclusive<F>(state: &AppState, job: F) -> Response
where
    F: FnOnce(Option<PathBuf>) -> nimbus::Result<Rendered> + Send + 'static,
{
    let Ok(_permit) = state.slots.clone().try_acquire_owned() else {
        return overloaded();
    };
    let _guard = state.render_lock.lock().await;
    let base_dir = state.base_dir.clone();
    match tokio::task::spawn_blocking(move || job(base_dir)).await {
        Ok(Ok(rendered)) => png_response(rendered),
        Ok(Err(nimbus::Error::Config(e))) => bad_request(&e),
        Ok(Err(e)) => internal(e.to_string()),
        Err(e) => internal(format!("render task failed: {e}")),
    }
}

async fn render(State(state): State<AppState>, body: Bytes) -> Response {
    let scene = match parse_render_request(&body) {
        Ok(s) => s,
        Err(e) => return bad_request(&e),
    };
    run_exclusive(&state, move |dir| render_png(&scene, dir.as_deref())).await
}

async fn diff(State(state): State<AppState>, body: Bytes) -> Response {
    let (left, right) = match parse_diff_request(&body) {
        Ok(pair) => pair,
        Err(e) => return bad_request(&e),
    };
    run_exclusive(&state, move |dir| diff_png(&left, &right, dir.as_deref())).await
}
