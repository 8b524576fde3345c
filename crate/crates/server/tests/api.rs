use std::collections::HashSet;
use std::io::Write;
use std::sync::{Arc, Mutex};

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::Value;
use tower::ServiceExt;

use annotate_server::{load_groups, open_campaign, router, AppState, ServiceConfig};
use foundry::annotate::Campaign;
use foundry::cartography::{write_csv, CartographyPoint, Group};
use foundry::labeler::LabeledPair;
use foundry::Relation;

fn pairs(n: usize) -> Vec<LabeledPair> {
    (0..n)
        .map(|i| LabeledPair {
            pair_id: format!("pair-{i}"),
            premise: format!("Premisa <b>{i}</b>."),
            hypothesis: format!("Ipoteza {i}."),
            label: Relation::ALL[i % 4],
            cue: None,
            source: None,
            auto_label: Some(Relation::ALL[(i + 1) % 4]),
        })
        .collect()
}

fn names() -> Vec<String> {
    ["ana", "dan", "ion"].iter().map(|s| s.to_string()).collect()
}

/// Log sink shared with the test so appended lines can be inspected.
#[derive(Clone, Default)]
struct SharedLog(Arc<Mutex<Vec<u8>>>);

impl Write for SharedLog {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn app(n: usize, votes: usize) -> (Router, AppState, SharedLog) {
    let campaign = Campaign::create(&pairs(n), &names(), votes).unwrap();
    let log = SharedLog::default();
    campaign.write_log(log.clone()).unwrap();
    let state = AppState::start(campaign, log.clone(), ServiceConfig { guidelines: None, groups: None });
    (router(state.clone()), state, log)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn vote(app: &Router, task: &str, annotator: &str, label: &str) -> (StatusCode, String) {
    let body = serde_json::json!({ "annotator": annotator, "label": label });
    call(app, "POST", &format!("/api/tasks/{task}/label"), Some(body)).await
}

#[tokio::test]
async fn full_campaign_flow() {
    let (app, state, _) = app(4, 3);
    let (s, body) = call(&app, "GET", "/api/tasks/next?annotator=ana", None).await;
    assert_eq!(s, StatusCode::OK);
    let view: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(view["task_id"], "t000000");
    assert_eq!(view["premise"], "Premisa <b>0</b>.");

    let (s, body) = vote(&app, "t000000", "ana", "contrastive").await;
    assert_eq!(s, StatusCode::OK);
    let out: Value = serde_json::from_str(&body).unwrap();
    assert_eq!((out["status"].as_str(), out["votes"].as_u64()), (Some("open"), Some(1)));
    assert_eq!(vote(&app, "t000000", "ana", "neutral").await.0, StatusCode::CONFLICT);
    assert_eq!(vote(&app, "t999999", "ana", "neutral").await.0, StatusCode::NOT_FOUND);
    assert_eq!(vote(&app, "t000000", "eve", "neutral").await.0, StatusCode::NOT_FOUND);
    assert_eq!(vote(&app, "t000000", "dan", "sarcasm").await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(call(&app, "GET", "/api/tasks/next?annotator=eve", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/api/tasks/next", None).await.0, StatusCode::BAD_REQUEST);

    let plan = [
        ["contrastive", "contrastive", "neutral"],
        ["neutral", "reasoning", "entailment"],
        ["reasoning", "reasoning", "reasoning"],
        ["entailment", "entailment", "neutral"],
    ];
    for (t, labels) in plan.iter().enumerate() {
        for (a, label) in names().iter().zip(labels) {
            if t == 0 && a == "ana" {
                continue;
            }
            let (s, _) = vote(&app, &format!("t{t:06}"), a, label).await;
            assert_eq!(s, StatusCode::OK);
        }
    }
    assert_eq!(vote(&app, "t000000", "dan", "neutral").await.0, StatusCode::CONFLICT);
    assert_eq!(call(&app, "GET", "/api/tasks/next?annotator=dan", None).await.0, StatusCode::NO_CONTENT);

    let (_, body) = call(&app, "GET", "/api/progress", None).await;
    assert_eq!(
        serde_json::from_str::<Value>(&body).unwrap(),
        serde_json::json!({"open": 0, "complete": 3, "discarded": 1})
    );

    let (s, body) = call(&app, "GET", "/api/export", None).await;
    assert_eq!(s, StatusCode::OK);
    let rows: Vec<Value> = body.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(
        rows,
        vec![
            serde_json::json!({"pair_id": "pair-0", "final_label": "contrastive"}),
            serde_json::json!({"pair_id": "pair-2", "final_label": "reasoning"}),
            serde_json::json!({"pair_id": "pair-3", "final_label": "entailment"}),
        ]
    );

    let (_, body) = call(&app, "GET", "/api/agreement", None).await;
    let report: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(report["complete_count"], 3);
    assert_eq!(report["discarded_count"], 1);
    let fleiss = report["fleiss_kappa"].as_f64().unwrap();
    assert!((-1.0..=1.0).contains(&fleiss));
    assert_eq!(state.snapshot().await.progress().complete, 3);
}

#[tokio::test]
async fn unassigned_annotator_is_forbidden() {
    let (app, _, _) = app(3, 2);
    // t000000 goes to ana and dan.
    assert_eq!(vote(&app, "t000000", "ion", "neutral").await.0, StatusCode::FORBIDDEN);
}

fn keys(v: &Value, out: &mut HashSet<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                out.insert(k.clone());
                keys(x, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|x| keys(x, out)),
        _ => {}
    }
}

#[tokio::test]
async fn no_response_carries_an_automatic_label() {
    let (app, _, _) = app(6, 3);
    let mut bodies = Vec::new();
    for a in names() {
        loop {
            let (s, body) = call(&app, "GET", &format!("/api/tasks/next?annotator={a}"), None).await;
            if s == StatusCode::NO_CONTENT {
                break;
            }
            let view: Value = serde_json::from_str(&body).unwrap();
            let mut k = HashSet::new();
            keys(&view, &mut k);
            assert_eq!(k, ["task_id", "premise", "hypothesis"].iter().map(|s| s.to_string()).collect());
            bodies.push(body);
            let task = view["task_id"].as_str().unwrap().to_string();
            let (_, out) = vote(&app, &task, &a, "neutral").await;
            bodies.push(out);
        }
    }
    for uri in ["/api/progress", "/api/export", "/api/guidelines"] {
        bodies.push(call(&app, "GET", uri, None).await.1);
    }
    // The agreement report holds campaign-level auto-vs-manual statistics only.
    let report: Value = serde_json::from_str(&call(&app, "GET", "/api/agreement", None).await.1).unwrap();
    let mut k = HashSet::new();
    keys(&report, &mut k);
    assert!(!k.contains("auto_label") && !k.contains("pair_id") && !k.contains("task_id"));
    for body in &bodies {
        let mut k = HashSet::new();
        for line in body.lines() {
            if let Ok(v) = serde_json::from_str::<Value>(line) {
                keys(&v, &mut k);
            }
        }
        assert!(!k.iter().any(|k| k.contains("auto")), "auto label key in {body}");
        assert!(!k.contains("label") && !k.contains("labels"), "label key in {body}");
    }
}

#[tokio::test]
async fn stored_tasks_do_not_carry_automatic_labels() {
    let (_, _, log) = app(5, 3);
    let text = String::from_utf8(log.0.lock().unwrap().clone()).unwrap();
    let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for task in header["tasks"].as_array().unwrap() {
        let mut k = HashSet::new();
        keys(task, &mut k);
        assert!(!k.iter().any(|k| k.contains("auto") || k == "label"), "{task}");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_votes_are_serialized_and_logged() {
    let (app, state, log) = app(60, 3);
    let mut handles = Vec::new();
    for a in names() {
        for t in 0..60 {
            let app = app.clone();
            let a = a.clone();
            handles.push(tokio::spawn(async move {
                // Each vote also races a duplicate of itself.
                let first = vote(&app, &format!("t{t:06}"), &a, Relation::ALL[t % 4].as_str()).await.0;
                let second = vote(&app, &format!("t{t:06}"), &a, "neutral").await.0;
                (first, second)
            }));
        }
    }
    for h in handles {
        let (first, second) = h.await.unwrap();
        assert_eq!(first, StatusCode::OK);
        assert_eq!(second, StatusCode::CONFLICT);
    }
    let bytes = log.0.lock().unwrap().clone();
    let replayed = Campaign::replay(bytes.as_slice()).unwrap();
    let live = state.snapshot().await;
    assert_eq!(&replayed, &*live);
    assert_eq!(live.progress().complete, 60);
}

#[tokio::test]
async fn agreement_by_cartography_group() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("carto.csv");
    let points: Vec<CartographyPoint> = (0..4)
        .map(|i| CartographyPoint {
            example_id: format!("pair-{i}"),
            confidence: 0.5,
            variability: 0.1,
            correctness: 0.5,
            groups: if i < 2 { vec![Group::E2L] } else { vec![Group::H2L] },
            score: 2.4,
        })
        .collect();
    write_csv(&points, std::fs::File::create(&csv).unwrap()).unwrap();
    let groups = load_groups(&csv).unwrap();

    let campaign = Campaign::create(&pairs(4), &names(), 3).unwrap();
    let state = AppState::start(
        campaign,
        std::io::sink(),
        ServiceConfig { guidelines: Some("# G".into()), groups: Some(groups) },
    );
    let app = router(state);
    for t in 0..4 {
        for a in names() {
            vote(&app, &format!("t{t:06}"), &a, "neutral").await;
        }
    }
    let (s, body) = call(&app, "GET", "/api/agreement?group=E2L", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["complete_count"], 2);
    let (_, body) = call(&app, "GET", "/api/agreement?group=A", None).await;
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["complete_count"], 0);
    assert_eq!(call(&app, "GET", "/api/agreement?group=X", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "GET", "/api/guidelines", None).await.1, "# G");
}

#[tokio::test]
async fn restart_replays_log_and_survives_torn_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("campaign.jsonl");
    let campaign = Campaign::create(&pairs(3), &names(), 3).unwrap();
    campaign.write_log(std::fs::File::create(&path).unwrap()).unwrap();

    let (c, file) = open_campaign(&path).unwrap();
    let app = router(AppState::start(c, file, ServiceConfig { guidelines: None, groups: None }));
    assert_eq!(vote(&app, "t000000", "ana", "reasoning").await.0, StatusCode::OK);
    assert_eq!(vote(&app, "t000000", "dan", "reasoning").await.0, StatusCode::OK);
    std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{\"event\":\"vo").unwrap();

    let (c, file) = open_campaign(&path).unwrap();
    assert_eq!(c.task("t000000").unwrap().labels.len(), 2);
    let app = router(AppState::start(c, file, ServiceConfig { guidelines: None, groups: None }));
    assert_eq!(vote(&app, "t000000", "dan", "neutral").await.0, StatusCode::CONFLICT);
    assert_eq!(vote(&app, "t000000", "ion", "neutral").await.0, StatusCode::OK);

    let (c, _) = open_campaign(&path).unwrap();
    assert_eq!(c.task("t000000").unwrap().final_label, Some(Relation::Reasoning));
}
