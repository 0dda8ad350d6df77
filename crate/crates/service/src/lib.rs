//! HTTP facade over the clot classifier.
//!
//! Studies are loaded once from a directory at startup and never change. The
//! filtered images for each study are computed on first use and cached.
//!
//! | route | result |
//! |---|---|
//! | `GET /api/studies` | `[{"id", "width", "height"}]`, sorted by id |
//! | `GET /api/studies/{id}/image?view=original\|simple\|weighted` | 8-bit PNG |
//! | `POST /api/studies/{id}/classify` | `{"assessment", "overlays"}` |

mod catalog;

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clotseg::classifier::{evaluate_with_filtered, ClassifyError};
use clotseg::image_io::encode_png;
use clotseg::report::{ErrorBody, Overlays};
use clotseg::{ClotAssessment, CriterionThresholds, FilterParams, RoiShape};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

pub use catalog::{CatalogError, StudyCatalog, StudySummary};

/// Body of `POST /api/studies/{id}/classify`: the ROI pair plus optional
/// overrides of the filter parameters and criterion thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRequest {
    pub lumen: RoiShape,
    pub clot: RoiShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<FilterParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<CriterionThresholds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub assessment: ClotAssessment,
    pub overlays: Overlays,
}

/// An error response: status code plus `{"error", "message"}` body.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.to_string(),
                message: message.into(),
            },
        }
    }

    pub fn status(&self) -> StatusCode {
        self.status
    }

    pub fn body(&self) -> &ErrorBody {
        &self.body
    }

    fn unknown_study(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_study",
            format!("no study with id {id:?}"),
        )
    }
}

impl From<ClassifyError> for ApiError {
    fn from(e: ClassifyError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Builds the application router over a loaded catalog.
pub fn router(catalog: Arc<StudyCatalog>) -> Router {
    Router::new()
        .route("/api/studies", get(list_studies))
        .route("/api/studies/{id}/image", get(study_image))
        .route("/api/studies/{id}/classify", post(classify_study))
        .layer(CorsLayer::permissive())
        .with_state(catalog)
}

/// Serves the router on an already bound listener until the task is dropped.
pub async fn serve(
    listener: tokio::net::TcpListener,
    catalog: Arc<StudyCatalog>,
) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        log::info!("serving {} studies on http://{addr}", catalog.len());
    }
    axum::serve(listener, router(catalog)).await
}

async fn list_studies(State(catalog): State<Arc<StudyCatalog>>) -> Json<Vec<StudySummary>> {
    Json(catalog.summaries())
}

#[derive(Debug, Deserialize)]
struct ViewQuery {
    view: Option<String>,
}

async fn study_image(
    State(catalog): State<Arc<StudyCatalog>>,
    Path(id): Path<String>,
    Query(query): Query<ViewQuery>,
) -> Result<Response, ApiError> {
    if !catalog.contains(&id) {
        return Err(ApiError::unknown_study(&id));
    }
    let view = query.view.unwrap_or_else(|| "original".to_string());
    if !matches!(view.as_str(), "original" | "simple" | "weighted") {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "unknown_view",
            format!("view must be original, simple or weighted, got {view:?}"),
        ));
    }
    let png = tokio::task::spawn_blocking(move || render_view(&catalog, &id, &view))
        .await
        .map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
        })??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

fn render_view(catalog: &StudyCatalog, id: &str, view: &str) -> Result<Vec<u8>, ApiError> {
    let image = if view == "original" {
        &catalog
            .get(id)
            .ok_or_else(|| ApiError::unknown_study(id))?
            .image
    } else {
        let set = catalog
            .filtered(id)
            .ok_or_else(|| ApiError::unknown_study(id))?
            .map_err(|e| ApiError::from(ClassifyError::from(e)))?;
        if view == "simple" {
            &set.simple_enhanced
        } else {
            &set.weighted_enhanced
        }
    };
    encode_png(image)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

async fn classify_study(
    State(catalog): State<Arc<StudyCatalog>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ClassifyResponse>, ApiError> {
    if !catalog.contains(&id) {
        return Err(ApiError::unknown_study(&id));
    }
    let request: ClassifyRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()))?;
    tokio::task::spawn_blocking(move || run_classification(&catalog, &id, &request))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map(Json)
}

/// Classifies a catalog study. The cached filtered set is reused when the
/// request keeps the default filter parameters.
pub fn run_classification(
    catalog: &StudyCatalog,
    id: &str,
    request: &ClassifyRequest,
) -> Result<ClassifyResponse, ApiError> {
    let slice = catalog.get(id).ok_or_else(|| ApiError::unknown_study(id))?;
    let params = request.params.clone().unwrap_or_default();
    let th = request.thresholds.clone().unwrap_or_default();
    th.validate()?;
    let (w, h) = slice.image.dimensions();
    clotseg::roi::make_masks(&request.lumen, &request.clot, w, h).map_err(ClassifyError::from)?;
    let filtered = if params == FilterParams::default() {
        catalog
            .filtered(id)
            .ok_or_else(|| ApiError::unknown_study(id))?
            .map_err(ClassifyError::from)?
            .clone()
    } else {
        clotseg::build_filtered_set(&slice.image, &params).map_err(ClassifyError::from)?
    };
    let eval =
        evaluate_with_filtered(slice, filtered, &request.lumen, &request.clot, &params, &th)?;
    Ok(ClassifyResponse {
        overlays: Overlays::new(&eval.masks, &eval.clot_binary),
        assessment: eval.assessment,
    })
}
