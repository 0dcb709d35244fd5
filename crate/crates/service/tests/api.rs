use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use cuisine_core::classifier::{train_classifier, MlpConfig, MlpModel};
use cuisine_core::corpus::Vocabulary;
use cuisine_core::embeddings::{train_embeddings, EmbeddingConfig, EmbeddingSpace};
use cuisine_core::synthetic::{self, SyntheticConfig};
use cuisine_service::{router, ClassifyResponse, ServiceState, SessionView, SuggestResponse};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const SUKIYAKI: [&str; 10] = [
    "soy sauce",
    "beef sirloin",
    "white sugar",
    "green onions",
    "mirin",
    "shiitake",
    "egg",
    "vegetable oil",
    "konnyaku",
    "chinese cabbage",
];

const CHEF_SWAPS: [(&str, &str); 5] = [
    ("mirin", "calvados"),
    ("vegetable oil", "olive oil"),
    ("soy sauce", "bouquet garni"),
    ("green onions", "fresh tarragon"),
    ("egg", "melted butter"),
];

fn models() -> &'static (MlpModel, EmbeddingSpace) {
    static MODELS: OnceLock<(MlpModel, EmbeddingSpace)> = OnceLock::new();
    MODELS.get_or_init(|| {
        let recipes = synthetic::recipes(&SyntheticConfig {
            recipes: 4000,
            ingredients: 700,
            seed: 8,
        });
        let vocab = Vocabulary::build(&recipes).unwrap();
        let config = MlpConfig {
            hidden_dims: (64, 32),
            epochs: 8,
            batch_size: 64,
            ..MlpConfig::default()
        };
        let (model, _) = train_classifier(&recipes, &vocab, &config).unwrap();
        let emb = EmbeddingConfig {
            dim: 32,
            epochs: 5,
            ..EmbeddingConfig::default()
        };
        (model, train_embeddings(&recipes, &vocab, &emb).unwrap())
    })
}

fn state() -> Arc<ServiceState> {
    let (m, s) = models();
    Arc::new(ServiceState::new(m.clone(), s.clone()).unwrap())
}

fn app() -> Router {
    router(state(), None)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(&body.to_string())).await
}

#[tokio::test]
async fn classify_returns_full_distribution_and_point() {
    let app = app();
    let (status, body) = post(
        &app,
        "/classify",
        json!({"ingredients": SUKIYAKI.iter().chain(["unobtainium"].iter()).collect::<Vec<_>>()}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let r: ClassifyResponse = serde_json::from_value(body).unwrap();
    assert_eq!(r.distribution.len(), 20);
    let total: f64 = r.distribution.iter().map(|c| c.probability).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(r.dropped_oov, ["unobtainium"]);
    let top = r
        .distribution
        .iter()
        .max_by(|a, b| a.probability.total_cmp(&b.probability))
        .unwrap();
    assert_eq!(top.country, "japanese");
    assert!(r.diagram_point.x.hypot(r.diagram_point.y) <= 1.0 + 1e-12);
}

#[tokio::test]
async fn classify_status_codes() {
    let app = app();
    assert_eq!(
        post(&app, "/classify", json!({"ingredients": []})).await.0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        post(&app, "/classify", json!({"ingredients": ["unobtainium"]})).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(
        post(&app, "/classify", json!({"ingredients": ["mirin"], "extra": 1}))
            .await
            .0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        call(&app, Method::POST, "/classify", Some("{not json")).await.0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        post(&app, "/classify", json!({"ingredients": "mirin"})).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn layout_is_stable_unit_circle() {
    let app = app();
    let (status, first) = call(&app, Method::GET, "/layout", None).await;
    assert_eq!(status, StatusCode::OK);
    let map = first.as_object().unwrap();
    assert_eq!(map.len(), 20);
    for v in map.values() {
        let (x, y) = (v[0].as_f64().unwrap(), v[1].as_f64().unwrap());
        assert!((x * x + y * y - 1.0).abs() < 1e-6);
    }
    assert_eq!(call(&app, Method::GET, "/layout", None).await.1, first);
}

#[tokio::test]
async fn session_walkthrough() {
    let app = app();
    let (status, body) = post(&app, "/sessions", json!({"ingredients": SUKIYAKI, "target": "french"})).await;
    assert_eq!(status, StatusCode::CREATED);
    let created: SessionView = serde_json::from_value(body).unwrap();
    let id = created.session_id.clone();
    assert_eq!(created.trail.len(), 1);
    assert_eq!(created.source, "japanese");

    let (status, body) = post(&app, &format!("/sessions/{id}/suggest"), json!({"ingredient": "mirin"})).await;
    assert_eq!(status, StatusCode::OK);
    let s: SuggestResponse = serde_json::from_value(body).unwrap();
    assert_eq!(s.suggestions.len(), 10);
    assert!(s.suggestions.iter().all(|x| x.original == "mirin"));

    let mut last = created;
    for (a, b) in CHEF_SWAPS {
        let (status, body) = post(
            &app,
            &format!("/sessions/{id}/apply"),
            json!({"replaced": a, "replacement": b}),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        last = serde_json::from_value(body).unwrap();
    }
    assert_eq!(last.history.len(), 5);
    assert_eq!(last.trail.len(), 6);
    let (status, body) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_value::<SessionView>(body).unwrap(), last);

    // Reverting restores the previous state exactly.
    let before_last = last.history[3].clone();
    let (status, body) = post(&app, &format!("/sessions/{id}/revert"), json!(null)).await;
    assert_eq!(status, StatusCode::OK);
    let reverted: SessionView = serde_json::from_value(body).unwrap();
    assert_eq!(reverted.distribution, before_last.distribution);
    assert_eq!(reverted.history.len(), 4);

    assert_eq!(
        call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await.0,
        StatusCode::NO_CONTENT
    );
    assert_eq!(
        call(&app, Method::GET, &format!("/sessions/{id}"), None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn session_error_codes() {
    let app = app();
    let (_, body) = post(&app, "/sessions", json!({"ingredients": SUKIYAKI, "target": "french"})).await;
    let id = body["session_id"].as_str().unwrap().to_string();
    let apply = |a: &str, b: &str| json!({"replaced": a, "replacement": b});
    let uri = format!("/sessions/{id}/apply");
    assert_eq!(post(&app, &uri, apply("mirin", "egg")).await.0, StatusCode::CONFLICT);
    assert_eq!(post(&app, &uri, apply("cognac", "thyme")).await.0, StatusCode::CONFLICT);
    assert_eq!(
        post(&app, &uri, apply("mirin", "unobtainium")).await.0,
        StatusCode::CONFLICT
    );
    assert_eq!(
        post(&app, &uri, json!({"replaced": "mirin"})).await.0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        post(
            &app,
            &uri,
            json!({"replaced": "mirin", "replacement": "cognac", "force": true})
        )
        .await
        .0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        post(&app, "/sessions/nope/apply", apply("mirin", "cognac")).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        post(&app, "/sessions/nope/suggest", json!({"ingredient": "mirin"}))
            .await
            .0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        post(
            &app,
            &format!("/sessions/{id}/suggest"),
            json!({"ingredient": "cognac"})
        )
        .await
        .0,
        StatusCode::CONFLICT
    );
    assert_eq!(
        post(&app, &format!("/sessions/{id}/revert"), json!(null)).await.0,
        StatusCode::CONFLICT
    );
    assert_eq!(
        post(
            &app,
            "/sessions",
            json!({"ingredients": SUKIYAKI, "target": "atlantis"})
        )
        .await
        .0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(
        post(
            &app,
            "/sessions",
            json!({"ingredients": ["unobtainium"], "target": "french"})
        )
        .await
        .0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(
        post(&app, "/sessions", json!({"ingredients": [], "target": "french"}))
            .await
            .0,
        StatusCode::BAD_REQUEST
    );
    // A double-submitted swap lands once.
    assert_eq!(post(&app, &uri, apply("mirin", "calvados")).await.0, StatusCode::OK);
    assert_eq!(
        post(&app, &uri, apply("mirin", "calvados")).await.0,
        StatusCode::CONFLICT
    );
    let (_, body) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(body["history"].as_array().unwrap().len(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_are_isolated() {
    let scripts: Vec<(&str, Vec<(&str, &str)>)> = vec![
        ("french", CHEF_SWAPS.to_vec()),
        (
            "mexican",
            vec![
                ("mirin", "salsa"),
                ("egg", "corn tortillas"),
                ("shiitake", "black beans"),
            ],
        ),
        (
            "indian",
            vec![
                ("soy sauce", "garam masala"),
                ("white sugar", "ghee"),
                ("konnyaku", "paneer"),
            ],
        ),
    ];
    // Serial reference, one fresh server per script.
    let mut serial = Vec::new();
    for (target, swaps) in &scripts {
        let app = app();
        let (_, body) = post(&app, "/sessions", json!({"ingredients": SUKIYAKI, "target": target})).await;
        let id = body["session_id"].as_str().unwrap().to_string();
        for (a, b) in swaps {
            post(
                &app,
                &format!("/sessions/{id}/apply"),
                json!({"replaced": a, "replacement": b}),
            )
            .await;
        }
        let (_, body) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
        serial.push(serde_json::from_value::<SessionView>(body).unwrap());
    }

    let app = app();
    let mut ids = Vec::new();
    for (target, _) in &scripts {
        let (_, body) = post(&app, "/sessions", json!({"ingredients": SUKIYAKI, "target": target})).await;
        ids.push(body["session_id"].as_str().unwrap().to_string());
    }
    let mut handles = Vec::new();
    for (id, (_, swaps)) in ids.iter().cloned().zip(scripts.clone()) {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            for (a, b) in swaps {
                post(&app, &format!("/sessions/{id}/suggest"), json!({"ingredient": a})).await;
                let (status, _) = post(
                    &app,
                    &format!("/sessions/{id}/apply"),
                    json!({"replaced": a, "replacement": b}),
                )
                .await;
                assert_eq!(status, StatusCode::OK);
                tokio::task::yield_now().await;
            }
        }));
    }
    for h in handles {
        h.await.unwrap();
    }
    for (id, reference) in ids.iter().zip(&serial) {
        let (_, body) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
        let mut got: SessionView = serde_json::from_value(body).unwrap();
        got.session_id = reference.session_id.clone();
        assert_eq!(&got, reference);
    }
}

#[tokio::test]
async fn snapshot_round_trip() {
    let state = state();
    let app = router(state.clone(), None);
    let (_, body) = post(&app, "/sessions", json!({"ingredients": SUKIYAKI, "target": "french"})).await;
    let id = body["session_id"].as_str().unwrap().to_string();
    post(
        &app,
        &format!("/sessions/{id}/apply"),
        json!({"replaced": "mirin", "replacement": "calvados"}),
    )
    .await;
    let (_, before) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sessions.json");
    state.write_snapshot(&path).unwrap();
    let fresh = self::state();
    fresh.restore(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let app2 = router(fresh, None);
    let (_, after) = call(&app2, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(before, after);
    // Ids keep counting after a restore.
    let (_, body) = post(&app2, "/sessions", json!({"ingredients": SUKIYAKI, "target": "french"})).await;
    assert_ne!(body["session_id"].as_str().unwrap(), id);
}

#[tokio::test]
async fn static_bundle_is_served_at_root() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>ui</html>").unwrap();
    let app = router(state(), Some(dir.path()));
    let req = Request::builder().uri("/").body(Body::empty()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[..], b"<html>ui</html>");
    assert_eq!(call(&app, Method::GET, "/layout", None).await.0, StatusCode::OK);
}
