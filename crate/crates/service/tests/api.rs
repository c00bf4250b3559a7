mod common;

use std::time::{Duration, Instant};

use common::{history_len, objective, record_id, routes, session_id, start, Api};
use futures::StreamExt;
use reqwest::StatusCode;
use serde_json::{json, Value};

const SQUARE_TOUR: f64 = 40.0;
/// Two routes [A, B] and [C]: 10 + 10 + 10√2 out and back, plus 2 × 10.
const SPLIT_TOUR: f64 = 54.142_135_623_730_95;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * b.abs().max(1.0)
}

/// A toy3 session whose left viewport shows [[A, B, C], []] and then
/// [[A, B], [C]].
async fn toy3_split(api: &Api) -> (u64, Value) {
    let view = api.session(json!({ "fixture": "toy3", "seed_count": 2 })).await;
    let id = session_id(&view);
    for (i, c) in ["A", "B", "C"].iter().enumerate() {
        let (status, body) = api.edit(id, "left", c, 0, i).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    let (status, left) = api.edit(id, "left", "C", 1, 0).await;
    assert_eq!(status, StatusCode::OK, "{left}");
    (id, left)
}

#[tokio::test(flavor = "multi_thread")]
async fn create_session_seeds_records_into_the_left_viewport() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "toy3", "seed_count": 2 })).await;
    let seeded = view["seeded"].as_array().expect("seeded");
    assert!(!seeded.is_empty() && seeded.len() <= 2);
    assert_eq!(view["viewports"]["left"]["record"]["record_id"], seeded[0]);
    assert!(view["viewports"]["right"]["record"].is_null());
    assert_eq!(history_len(&view["history"]), seeded.len());
    assert_eq!(view["gallery"]["order"].as_array().expect("order").len(), seeded.len());
}

#[tokio::test(flavor = "multi_thread")]
async fn create_session_rejects_bad_input() {
    let api = start().await;
    let (status, body) = api.post("/sessions", json!({ "fixture": "nowhere" })).await;
    assert_eq!(status, StatusCode::NOT_FOUND, "{body}");
    let (status, body) = api.post("/sessions", json!({})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert_eq!(body["error"], "usage_error");
    let (status, body) = api.post("/sessions", json!({ "solomon": "TOY\nVEHICLE\n" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert_eq!(body["error"], "parse_error");
    let (status, _) = api.get("/sessions/999").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn create_session_from_solomon_text() {
    let api = start().await;
    let text = include_str!("../../core/fixtures/toy3.solomon.txt");
    let view = api.session(json!({ "solomon": text, "seed_count": 1 })).await;
    assert_eq!(view["instance"]["customers"].as_array().expect("customers").len(), 3);
    assert!(close(objective(&view["viewports"]["left"]), SQUARE_TOUR));
}

#[tokio::test(flavor = "multi_thread")]
async fn edit_moves_a_customer_and_appends_a_child() {
    let api = start().await;
    let (id, left) = toy3_split(&api).await;
    assert_eq!(routes(&left), vec![vec!["A", "B"], vec!["C"]]);
    assert!(close(objective(&left), SPLIT_TOUR), "{}", objective(&left));
    let record = &left["record"];
    assert_eq!(record["origin"], "manual_edit");
    assert_eq!(record["parents"].as_array().expect("parents").len(), 1);
    assert_eq!(record["feasible"], true);
    let workload = &record["solution"]["workload"];
    assert_eq!(workload["customers_per_vehicle"], json!([2, 1]));

    let (status, body) = api.edit(id, "left", "C", 5, 0).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (status, body) = api.edit(id, "left", "Z", 0, 0).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (status, body) = api.edit(id, "middle", "C", 0, 0).await;
    assert_eq!(status, StatusCode::NOT_FOUND, "{body}");
}

#[tokio::test(flavor = "multi_thread")]
async fn edit_on_an_empty_viewport_is_refused() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "toy3", "seed_count": 1 })).await;
    let (status, body) = api.edit(session_id(&view), "right", "A", 0, 0).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
}

#[tokio::test(flavor = "multi_thread")]
async fn cyclic_order_is_reported_without_a_record() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "toy3", "seed_count": 1 })).await;
    let id = session_id(&view);
    for (before, after) in [("A", "B"), ("B", "C")] {
        let (status, body) = api
            .constrain(id, "left", json!({ "op": "add_order", "before": before, "after": after }))
            .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_eq!(body["record"]["origin"], "constraint_change");
    }
    let (_, history) = api.get(&format!("/sessions/{id}/history")).await;
    let before = history_len(&history);
    let (status, body) = api
        .constrain(id, "left", json!({ "op": "add_order", "before": "C", "after": "A" }))
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(body["error"], "constraint_conflict");
    assert_eq!(body["detail"]["kind"], "cycle");
    assert_eq!(body["detail"]["path"], json!(["A", "B", "C", "A"]));
    let (_, history) = api.get(&format!("/sessions/{id}/history")).await;
    assert_eq!(history_len(&history), before);
}

#[tokio::test(flavor = "multi_thread")]
async fn lock_clash_names_the_order_pair() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "toy3", "seed_count": 1 })).await;
    let id = session_id(&view);
    for change in [
        json!({ "op": "add_order", "before": "A", "after": "B" }),
        json!({ "op": "add_lock", "customer": "A", "vehicle": 0 }),
    ] {
        let (status, body) = api.constrain(id, "left", change).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    let (status, body) = api
        .constrain(id, "left", json!({ "op": "add_lock", "customer": "B", "vehicle": 1 }))
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(body["detail"]["kind"], "lock_clash");
    assert_eq!(body["detail"]["before"], "A");
    assert_eq!(body["detail"]["after"], "B");

    let (status, body) = api
        .constrain(id, "left", json!({ "op": "remove_lock", "customer": "C" }))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (status, body) = api
        .constrain(id, "left", json!({ "op": "remove_order", "before": "A", "after": "B" }))
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["record"]["solution"]["constraints"]["orders"], json!([]));
}

#[tokio::test(flavor = "multi_thread")]
async fn reoptimise_improves_the_split_tour() {
    let api = start().await;
    let (id, left) = toy3_split(&api).await;
    let parent = record_id(&left);
    let terminal = api
        .reoptimise_done(id, "left", json!({ "wall_time": 3.0, "seed": 1 }))
        .await;
    assert_eq!(terminal["status"], "improved", "{terminal}");
    assert!(close(terminal["objective"].as_f64().expect("objective"), SQUARE_TOUR));
    let child = terminal["record_id"].as_u64().expect("record id");
    let (_, viewport) = api.get(&format!("/sessions/{id}/viewports/left")).await;
    assert_eq!(record_id(&viewport), child);
    assert_eq!(viewport["record"]["origin"], "reoptimised");
    assert_eq!(viewport["record"]["parents"], json!([parent]));
    assert!(viewport["job_id"].is_null());
}

#[tokio::test(flavor = "multi_thread")]
async fn reoptimise_of_an_optimum_is_unchanged() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "toy3", "seed_count": 1 })).await;
    let id = session_id(&view);
    let terminal = api
        .reoptimise_done(id, "left", json!({ "iterations": 2000, "seed": 3 }))
        .await;
    assert_eq!(terminal["status"], "unchanged", "{terminal}");
    assert!(terminal["record_id"].is_u64());
}

#[tokio::test(flavor = "multi_thread")]
async fn reoptimise_rejects_a_budget_without_limits() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "toy3", "seed_count": 1 })).await;
    let (status, body) = api.reoptimise(session_id(&view), "left", json!({ "seed": 1 })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
}

#[tokio::test(flavor = "multi_thread")]
async fn busy_viewport_refuses_work_while_the_other_stays_interactive() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "study12", "seed_count": 2 })).await;
    let id = session_id(&view);
    let first = view["seeded"][0].as_u64().expect("seed");
    let (status, _) = api
        .post(&format!("/sessions/{id}/viewports/right/load"), json!({ "record_id": first }))
        .await;
    assert_eq!(status, StatusCode::OK);

    let (status, started) = api.reoptimise(id, "left", json!({ "wall_time": 2.0 })).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{started}");
    let job = started["job_id"].as_u64().expect("job");

    let (status, body) = api.reoptimise(id, "left", json!({ "wall_time": 1.0 })).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(body["message"], "job in progress");
    let (status, body) = api.edit(id, "left", "A", 0, 0).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(body["error"], "job_in_progress");
    let (status, body) = api
        .post(&format!("/sessions/{id}/viewports/left/load"), json!({ "record_id": first }))
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");

    let (status, body) = api.edit(id, "right", "A", 1, 0).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, body) = api
        .constrain(id, "right", json!({ "op": "add_lock", "customer": "A", "vehicle": 1 }))
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");

    let events = api.wait_job(job).await;
    assert!(events.len() >= 2);
    let (status, body) = api.edit(id, "left", "A", 0, 0).await;
    assert_eq!(status, StatusCode::OK, "{body}");
}

#[tokio::test(flavor = "multi_thread")]
async fn cancel_stops_the_job_without_a_record() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "study12", "seed_count": 1 })).await;
    let id = session_id(&view);
    let (_, history) = api.get(&format!("/sessions/{id}/history")).await;
    let before = history_len(&history);
    let (_, started) = api.reoptimise(id, "left", json!({ "wall_time": 20.0 })).await;
    let job = started["job_id"].as_u64().expect("job");
    tokio::time::sleep(Duration::from_millis(300)).await;
    let clock = Instant::now();
    let (status, _) = api.post(&format!("/jobs/{job}/cancel"), json!({})).await;
    assert_eq!(status, StatusCode::OK);
    let events = api.wait_job(job).await;
    assert!(clock.elapsed() < Duration::from_secs(2), "{:?}", clock.elapsed());
    let terminal = events.last().expect("terminal");
    assert_eq!(terminal["status"], "cancelled", "{terminal}");
    assert!(terminal.get("record_id").is_none());
    let (_, history) = api.get(&format!("/sessions/{id}/history")).await;
    assert_eq!(history_len(&history), before);
    let (status, _) = api.post("/jobs/999/cancel", json!({})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn event_stream_delivers_ordered_events_until_the_terminal_one() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "study12", "seed_count": 1 })).await;
    let id = session_id(&view);
    let (_, started) = api.reoptimise(id, "left", json!({ "wall_time": 1.5 })).await;
    let job = started["job_id"].as_u64().expect("job");
    let response = api.raw(&format!("/jobs/{job}/events")).await;
    assert_eq!(response.status(), StatusCode::OK);
    assert!(response.headers()["content-type"].to_str().expect("type").starts_with("text/event-stream"));
    let mut body = response.bytes_stream();
    let mut text = String::new();
    while let Some(chunk) = body.next().await {
        text.push_str(&String::from_utf8_lossy(&chunk.expect("chunk")));
    }
    let events: Vec<Value> = text
        .lines()
        .filter_map(|l| l.strip_prefix("data:"))
        .map(|d| serde_json::from_str(d.trim()).expect("event json"))
        .collect();
    assert!(events.len() >= 4, "{} events", events.len());
    for (i, e) in events.iter().enumerate() {
        assert_eq!(e["seq"], json!(i));
        assert_eq!(e["job_id"], json!(job));
    }
    let terminal = events.last().expect("terminal");
    assert_eq!(terminal["phase"], "finished");
    assert!(terminal["status"].is_string());

    let (status, page) = api.get(&format!("/jobs/{job}/events?mode=poll&since=0")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["events"].as_array().expect("events").len(), events.len());
    assert_eq!(page["done"], true);
    let (status, _) = api.get(&format!("/jobs/{job}/events?mode=carrier")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread")]
async fn viewports_show_independent_records() {
    let api = start().await;
    let view = api.session(json!({ "fixture": "study12", "seed_count": 2 })).await;
    let id = session_id(&view);
    let seeded: Vec<u64> = view["seeded"].as_array().expect("seeded").iter().filter_map(Value::as_u64).collect();
    assert_eq!(seeded.len(), 2);
    for (side, record) in [("left", seeded[0]), ("right", seeded[1])] {
        let (status, body) = api
            .post(&format!("/sessions/{id}/viewports/{side}/load"), json!({ "record_id": record }))
            .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_eq!(record_id(&body), record);
    }
    let (_, session) = api.get(&format!("/sessions/{id}")).await;
    assert_eq!(record_id(&session["viewports"]["left"]), seeded[0]);
    assert_eq!(record_id(&session["viewports"]["right"]), seeded[1]);
    assert_ne!(
        session["viewports"]["left"]["record"]["solution"],
        session["viewports"]["right"]["record"]["solution"]
    );
    assert_eq!(history_len(&session["history"]), 2);
    let (status, _) = api
        .post(&format!("/sessions/{id}/viewports/left/load"), json!({ "record_id": 77 }))
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn history_arcs_follow_derivations() {
    let api = start().await;
    let (id, left) = toy3_split(&api).await;
    let (_, history) = api.get(&format!("/sessions/{id}/history")).await;
    let bars = history["bars"].as_array().expect("bars");
    assert_eq!(bars.len(), 6);
    let last = bars.last().expect("bar");
    assert_eq!(last["record_id"], left["record"]["record_id"]);
    assert_eq!(last["parent_arcs"], json!([{ "from": 5, "to": 6 }]));
    assert_eq!(bars[0]["parent_arcs"], json!([]));
}

#[tokio::test(flavor = "multi_thread")]
async fn gallery_bookmark_rename_and_reorder() {
    let api = start().await;
    let (id, left) = toy3_split(&api).await;
    let edited = record_id(&left);
    let (status, record) = api
        .post(&format!("/records/{edited}/bookmark"), json!({ "session_id": id, "bookmarked": true }))
        .await;
    assert_eq!(status, StatusCode::OK, "{record}");
    assert_eq!(record["bookmarked"], true);
    let (status, record) = api
        .post(&format!("/records/{edited}/rename"), json!({ "session_id": id, "name": "  split  " }))
        .await;
    assert_eq!(status, StatusCode::OK, "{record}");
    assert_eq!(record["name"], "split");
    let (status, _) = api
        .post(&format!("/records/{edited}/rename"), json!({ "session_id": id, "name": " " }))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = api
        .post("/records/404/bookmark", json!({ "session_id": id, "bookmarked": true }))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, gallery) = api.get(&format!("/sessions/{id}/gallery")).await;
    let order: Vec<u64> = gallery["order"].as_array().expect("order").iter().filter_map(Value::as_u64).collect();
    assert_eq!(order.last(), Some(&edited));

    let (status, gallery) = api
        .post(&format!("/sessions/{id}/gallery"), json!({ "action": "move", "record_id": edited, "position": 0 }))
        .await;
    assert_eq!(status, StatusCode::OK, "{gallery}");
    assert_eq!(gallery["order"][0], json!(edited));

    let (status, gallery) = api
        .post(&format!("/sessions/{id}/gallery"), json!({ "action": "reorder", "key": "objective" }))
        .await;
    assert_eq!(status, StatusCode::OK, "{gallery}");
    let objectives: Vec<f64> = gallery["records"]
        .as_array()
        .expect("records")
        .iter()
        .map(|r| r["objective"].as_f64().expect("objective"))
        .collect();
    assert!(objectives.windows(2).all(|w| w[0] <= w[1]), "{objectives:?}");
    assert_eq!(*gallery["order"].as_array().expect("order").last().expect("last"), json!(edited));

    let mut reversed: Vec<u64> = gallery["order"].as_array().expect("order").iter().filter_map(Value::as_u64).collect();
    reversed.reverse();
    let (status, gallery) = api
        .post(&format!("/sessions/{id}/gallery"), json!({ "action": "set_order", "order": reversed }))
        .await;
    assert_eq!(status, StatusCode::OK, "{gallery}");
    assert_eq!(gallery["order"], json!(reversed));
    let (status, _) = api
        .post(&format!("/sessions/{id}/gallery"), json!({ "action": "set_order", "order": [1] }))
        .await;
    assert!(status.is_client_error());
}

#[tokio::test(flavor = "multi_thread")]
async fn exported_session_imports_field_for_field() {
    let api = start().await;
    let (id, _) = toy3_split(&api).await;
    api.post("/records/2/rename", json!({ "session_id": id, "name": "second" })).await;
    let exported: Value = api.raw(&format!("/sessions/{id}/export")).await.json().await.expect("json");
    let imported = api.session(json!({ "session": exported })).await;
    let copy = session_id(&imported);
    assert_ne!(copy, id);
    let (_, original) = api.get(&format!("/sessions/{id}")).await;
    assert_eq!(imported["history"], original["history"]);
    assert_eq!(imported["gallery"], original["gallery"]);
    let again: Value = api.raw(&format!("/sessions/{copy}/export")).await.json().await.expect("json");
    assert_eq!(again, exported);

    let (status, body) = api.post("/sessions", json!({ "session": { "version": 99 } })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert_eq!(body["error"], "parse_error");
}

#[tokio::test(flavor = "multi_thread")]
async fn fixtures_are_listed() {
    let api = start().await;
    let (status, body) = api.get("/fixtures").await;
    assert_eq!(status, StatusCode::OK);
    let names = body["fixtures"].as_array().expect("fixtures");
    for name in ["scenario1", "scenario4", "study12", "toy3"] {
        assert!(names.contains(&json!(name)), "{name}");
    }
}
