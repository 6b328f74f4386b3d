//! Stateless JSON API: every response is a function of the config and the
//! request body alone.

use std::fmt;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bracket_exact::bracket::{CombinationCounts, ScheduleDescriptor, TournamentResult};
use bracket_exact::data_io::{GroupEntry, TeamIndex};
use bracket_exact::match_model::{KnockoutRule, MatchResult, OutcomeOverride, Stage};
use bracket_exact::Error;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::json;

use crate::commands::Context;
use crate::CliError;

/// A team given by name or by global index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TeamRef {
    Index(usize),
    Name(String),
}

impl<'de> Deserialize<'de> for TeamRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = TeamRef;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a team name or index")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<TeamRef, E> {
                Ok(TeamRef::Index(v as usize))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<TeamRef, E> {
                Ok(TeamRef::Name(v.to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideBody {
    pub stage: Stage,
    pub team_a: TeamRef,
    pub team_b: TeamRef,
    pub result: MatchResult,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wrapped {
    overrides: Vec<OverrideBody>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NamedOverride {
    pub stage: Stage,
    pub team_a: String,
    pub team_b: String,
    pub result: MatchResult,
}

impl NamedOverride {
    fn new(o: &OutcomeOverride, teams: &TeamIndex) -> Self {
        Self {
            stage: o.stage,
            team_a: teams.name(o.team_a).into(),
            team_b: teams.name(o.team_b).into(),
            result: o.result,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TeamInfo {
    pub index: usize,
    pub name: String,
    pub group: String,
    pub rating: f64,
}

#[derive(Debug, Serialize)]
pub struct TournamentInfo {
    pub name: String,
    pub sigma: f64,
    pub knockout_rule: KnockoutRule,
    pub schedule: ScheduleDescriptor,
    pub reach_labels: Vec<String>,
    pub round_labels: Vec<String>,
    /// Bracket order.
    pub groups: Vec<GroupEntry>,
    pub teams: Vec<TeamInfo>,
    /// Results fixed by the server's config; request overrides come on top.
    pub overrides: Vec<NamedOverride>,
}

#[derive(Debug, Serialize)]
pub struct TeamResult {
    pub index: usize,
    pub name: String,
    pub group: String,
    pub reach: Vec<f64>,
    pub win: f64,
    /// `reach` minus the no-override baseline.
    pub delta_reach: Vec<f64>,
    pub delta_win: f64,
}

#[derive(Debug, Serialize)]
pub struct ComputeResponse {
    pub labels: Vec<String>,
    pub overrides: Vec<NamedOverride>,
    pub teams: Vec<TeamResult>,
    pub combos: CombinationCounts,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<String>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>, field: Option<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
            field,
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: message.into(),
            field: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = match self.field {
            Some(f) => json!({ "error": self.message, "field": f }),
            None => json!({ "error": self.message }),
        };
        (self.status, Json(body)).into_response()
    }
}

struct Inner {
    ctx: Context,
    baseline: TournamentResult,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(ctx: Context) -> Result<Self, CliError> {
        let baseline = ctx.compute(&ctx.matrices()?)?;
        Ok(Self(Arc::new(Inner { ctx, baseline })))
    }

    fn teams(&self) -> &TeamIndex {
        &self.0.ctx.config.teams
    }

    pub fn tournament(&self) -> TournamentInfo {
        let ctx = &self.0.ctx;
        let cfg = &ctx.config;
        TournamentInfo {
            name: cfg.name.clone(),
            sigma: ctx.sigma,
            knockout_rule: cfg.knockout_rule,
            schedule: cfg.schedule.clone(),
            reach_labels: cfg.schedule.reach_labels(),
            round_labels: cfg.schedule.round_labels(),
            groups: cfg.groups.clone(),
            teams: cfg
                .ratings
                .iter()
                .map(|r| TeamInfo {
                    index: r.team_id,
                    name: r.name.clone(),
                    group: cfg.teams.group_label(r.team_id).into(),
                    rating: r.points,
                })
                .collect(),
            overrides: cfg
                .overrides
                .iter()
                .chain(&ctx.extra)
                .map(|o| NamedOverride::new(o, &cfg.teams))
                .collect(),
        }
    }

    /// Resolve and check a request body without computing anything.
    pub fn parse_overrides(&self, body: &[u8]) -> Result<Vec<OutcomeOverride>, ApiError> {
        let value: serde_json::Value = serde_json::from_slice(body)
            .map_err(|e| ApiError::bad_request(format!("invalid JSON: {e}"), None))?;
        let (items, prefix) = if value.is_array() {
            (from_value::<Vec<OverrideBody>>(value)?, String::new())
        } else {
            (
                from_value::<Wrapped>(value)?.overrides,
                "overrides".to_string(),
            )
        };
        let teams = self.teams();
        let n = teams.len();
        let resolve = |r: &TeamRef, field: String| -> Result<usize, ApiError> {
            match r {
                TeamRef::Index(i) if *i < n => Ok(*i),
                TeamRef::Index(i) => Err(ApiError::bad_request(
                    format!("team index {i} outside 0..{n}"),
                    Some(field),
                )),
                TeamRef::Name(s) => teams.index(s).ok_or_else(|| {
                    ApiError::bad_request(format!("unknown team `{s}`"), Some(field))
                }),
            }
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let at = |f: &str| format!("{prefix}[{i}].{f}");
            let o = OutcomeOverride {
                stage: item.stage,
                team_a: resolve(&item.team_a, at("team_a"))?,
                team_b: resolve(&item.team_b, at("team_b"))?,
                result: item.result,
            };
            if let Err(e) = o.validate(n) {
                let field = if o.team_a == o.team_b {
                    at("team_b")
                } else {
                    at("result")
                };
                return Err(ApiError::bad_request(e.to_string(), Some(field)));
            }
            out.push(o);
        }
        Ok(out)
    }

    pub fn compute(&self, overrides: &[OutcomeOverride]) -> Result<ComputeResponse, ApiError> {
        let ctx = &self.0.ctx;
        let m = ctx.matrices_with(overrides).map_err(|e| match e {
            Error::Conflict { .. } | Error::InvalidParameter(_) => {
                ApiError::bad_request(e.to_string(), None)
            }
            other => ApiError::internal(other.to_string()),
        })?;
        let r = ctx
            .compute(&m)
            .map_err(|e| ApiError::internal(e.to_string()))?;
        let base = &self.0.baseline;
        let teams = (0..r.reach.num_teams())
            .map(|i| TeamResult {
                index: i,
                name: ctx.config.teams.name(i).into(),
                group: ctx.config.teams.group_label(i).into(),
                reach: r.reach.probs[i].clone(),
                win: r.win[i],
                delta_reach: r.reach.probs[i]
                    .iter()
                    .zip(&base.reach.probs[i])
                    .map(|(a, b)| a - b)
                    .collect(),
                delta_win: r.win[i] - base.win[i],
            })
            .collect();
        Ok(ComputeResponse {
            labels: r.reach.labels.clone(),
            overrides: overrides
                .iter()
                .map(|o| NamedOverride::new(o, &ctx.config.teams))
                .collect(),
            teams,
            combos: r.combos,
        })
    }
}

fn from_value<T: for<'de> Deserialize<'de>>(value: serde_json::Value) -> Result<T, ApiError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = (path != ".").then_some(path);
        ApiError::bad_request(e.into_inner().to_string(), field)
    })
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn tournament(State(state): State<AppState>) -> Json<TournamentInfo> {
    Json(state.tournament())
}

async fn compute(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<ComputeResponse>, ApiError> {
    let overrides = state.parse_overrides(&body)?;
    tokio::task::spawn_blocking(move || state.compute(&overrides))
        .await
        .map_err(|e| ApiError::internal(format!("computation aborted: {e}")))?
        .map(Json)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/tournament", get(tournament))
        .route("/compute", post(compute))
        .with_state(state)
}

pub async fn serve(ctx: Context, port: u16) -> Result<(), CliError> {
    let app = router(AppState::new(ctx)?);
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
