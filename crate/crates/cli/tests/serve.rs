use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use bracket_exact::data_io::{emit_report, OutputFormat, Report, TournamentConfig};
use bracket_exact_cli::commands::{self, Context};
use bracket_exact_cli::serve::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn context() -> Context {
    let config = TournamentConfig::bundled("women-2023").unwrap();
    let sigma = config.sigma;
    Context {
        config,
        sigma,
        extra: Vec::new(),
        format: OutputFormat::JsonLines,
    }
}

fn app() -> Router {
    router(AppState::new(context()).unwrap())
}

async fn call(app: Router, method: &str, uri: &str, body: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, bytes)
}

async fn json_call(method: &str, uri: &str, body: &str) -> (StatusCode, Value) {
    let (s, b) = call(app(), method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap())
}

#[tokio::test]
async fn health() {
    let (s, v) = json_call("GET", "/health", "").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
}

#[tokio::test]
async fn tournament_description() {
    let (s, v) = json_call("GET", "/tournament", "").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["teams"].as_array().unwrap().len(), 32);
    assert_eq!(v["teams"][8]["name"], "USA");
    assert_eq!(v["teams"][8]["group"], "E");
    assert_eq!(v["groups"][1]["label"], "C");
    assert_eq!(v["schedule"]["name"], "wc2023");
    assert_eq!(v["overrides"], json!([]));
    assert_eq!(
        v["reach_labels"],
        json!(["L16", "QF", "SF", "Final", "Champion"])
    );
}

#[tokio::test]
async fn empty_overrides_match_compute_command() {
    let (s, v) = json_call("POST", "/compute", "[]").await;
    assert_eq!(s, StatusCode::OK);
    let ctx = context();
    let expected = commands::compute(&ctx).unwrap();
    let r = ctx.compute(&ctx.matrices().unwrap()).unwrap();
    assert_eq!(
        expected,
        emit_report(
            &Report::new(&ctx.config, ctx.sigma, &r),
            OutputFormat::JsonLines
        )
    );
    for (i, team) in v["teams"].as_array().unwrap().iter().enumerate() {
        let reach: Vec<f64> = serde_json::from_value(team["reach"].clone()).unwrap();
        // serde_json's default float parser is not correctly rounded.
        assert!(reach
            .iter()
            .zip(&r.reach.probs[i])
            .all(|(a, b)| (a - b).abs() < 1e-15));
        assert!((team["win"].as_f64().unwrap() - r.win[i]).abs() < 1e-15);
        assert!(team["delta_reach"]
            .as_array()
            .unwrap()
            .iter()
            .all(|d| d.as_f64() == Some(0.0)));
        assert_eq!(team["delta_win"].as_f64(), Some(0.0));
    }
    let (_, wrapped) = call(app(), "POST", "/compute", r#"{"overrides": []}"#).await;
    let (_, bare) = call(app(), "POST", "/compute", "[]").await;
    assert_eq!(wrapped, bare);
}

#[tokio::test]
async fn pinned_path_raises_champion_probability() {
    let cfg = TournamentConfig::bundled("women-2023").unwrap();
    let zambia = cfg.teams.index("Zambia").unwrap();
    let mut pins = Vec::new();
    for other in 0..32 {
        if other == zambia {
            continue;
        }
        if other / 4 == zambia / 4 {
            pins.push(json!({ "stage": "group", "team_a": "Zambia", "team_b": cfg.teams.name(other), "result": "a_wins" }));
        }
        pins.push(
            json!({ "stage": "knockout", "team_a": other, "team_b": zambia, "result": "b_wins" }),
        );
    }
    let (s, v) = json_call("POST", "/compute", &Value::Array(pins).to_string()).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let team = &v["teams"][zambia];
    assert!((team["win"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(team["delta_win"].as_f64().unwrap() > 0.0);

    let one =
        json!([{ "stage": "group", "team_a": "Zambia", "team_b": "Spain", "result": "a_wins" }])
            .to_string();
    let (_, v) = json_call("POST", "/compute", &one).await;
    assert!(v["teams"][zambia]["delta_reach"][0].as_f64().unwrap() > 0.0);
    assert_eq!(v["overrides"][0]["team_b"], "Spain");
}

#[tokio::test]
async fn malformed_bodies_are_400_with_field() {
    let cases = [
        (
            r#"[{"stage":"group","team_a":"USA","team_b":"Vietnam","result":"win"}]"#,
            Some("[0].result"),
        ),
        (
            r#"[{"stage":"group","team_a":"USA","team_b":"Vietnam","result":"draw","x":1}]"#,
            Some("[0].x"),
        ),
        (
            r#"[{"stage":"group","team_a":"Atlantis","team_b":"Vietnam","result":"draw"}]"#,
            Some("[0].team_a"),
        ),
        (
            r#"[{"stage":"knockout","team_a":"USA","team_b":"Vietnam","result":"draw"}]"#,
            Some("[0].result"),
        ),
        (
            r#"{"overrides":[{"stage":"group","team_a":"USA","team_b":"USA","result":"draw"}]}"#,
            Some("overrides[0].team_b"),
        ),
        (
            r#"{"overrides":[{"stage":"group","team_a":"USA","team_b":99,"result":"draw"}]}"#,
            Some("overrides[0].team_b"),
        ),
        (
            r#"[{"stage":"group","team_a":"USA","team_b":"Vietnam"}]"#,
            Some("[0]"),
        ),
        ("not json", None),
    ];
    for (body, field) in cases {
        let (s, v) = json_call("POST", "/compute", body).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body}");
        assert!(v["error"].as_str().is_some_and(|e| !e.is_empty()));
        if let Some(f) = field {
            assert_eq!(v["field"], f, "{body}: {v}");
        }
    }
    let conflict = r#"[{"stage":"group","team_a":"USA","team_b":"Vietnam","result":"a_wins"},
                       {"stage":"group","team_a":"Vietnam","team_b":"USA","result":"a_wins"}]"#;
    let (s, v) = json_call("POST", "/compute", conflict).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("conflicting"));
}

#[tokio::test]
async fn concurrent_requests_are_identical() {
    let app = app();
    let body = r#"[{"stage":"group","team_a":"USA","team_b":"Netherlands","result":"draw"}]"#;
    let calls = (0..8).map(|_| call(app.clone(), "POST", "/compute", body));
    let results = futures_join(calls).await;
    for r in &results[1..] {
        assert_eq!(r, &results[0]);
    }
    assert_eq!(results[0].0, StatusCode::OK);
}

async fn futures_join<F: std::future::Future<Output = (StatusCode, Vec<u8>)> + Send + 'static>(
    calls: impl Iterator<Item = F>,
) -> Vec<(StatusCode, Vec<u8>)> {
    let handles: Vec<_> = calls.map(tokio::spawn).collect();
    let mut out = Vec::new();
    for h in handles {
        out.push(h.await.unwrap());
    }
    out
}
