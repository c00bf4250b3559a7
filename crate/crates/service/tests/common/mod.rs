#![allow(dead_code)]

use std::time::{Duration, Instant};

use reqwest::StatusCode;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use vrptw_service::{serve, Config};

pub struct Api {
    pub base: String,
    http: reqwest::Client,
}

/// Starts a server on an ephemeral port with short default budgets.
pub async fn start() -> Api {
    let config = Config {
        reoptimise_budget: Duration::from_millis(1000),
        seeding_budget: Duration::from_millis(1000),
        ..Config::default()
    };
    let listener = TcpListener::bind("127.0.0.1:0").await.expect("bind");
    let base = format!("http://{}", listener.local_addr().expect("addr"));
    tokio::spawn(serve(listener, config));
    Api {
        base,
        http: reqwest::Client::new(),
    }
}

impl Api {
    pub async fn get(&self, path: &str) -> (StatusCode, Value) {
        let response = self.http.get(format!("{}{path}", self.base)).send().await.expect("request");
        let status = response.status();
        (status, response.json().await.unwrap_or(Value::Null))
    }

    pub async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let response = self
            .http
            .post(format!("{}{path}", self.base))
            .json(&body)
            .send()
            .await
            .expect("request");
        let status = response.status();
        (status, response.json().await.unwrap_or(Value::Null))
    }

    pub async fn raw(&self, path: &str) -> reqwest::Response {
        self.http.get(format!("{}{path}", self.base)).send().await.expect("request")
    }

    pub async fn session(&self, body: Value) -> Value {
        let (status, view) = self.post("/sessions", body).await;
        assert_eq!(status, StatusCode::CREATED, "{view}");
        view
    }

    pub async fn edit(&self, session: u64, viewport: &str, customer: &str, vehicle: usize, position: usize) -> (StatusCode, Value) {
        self.post(
            &format!("/sessions/{session}/viewports/{viewport}/edit"),
            json!({ "customer": customer, "target_vehicle": vehicle, "target_position": position }),
        )
        .await
    }

    pub async fn constrain(&self, session: u64, viewport: &str, change: Value) -> (StatusCode, Value) {
        self.post(&format!("/sessions/{session}/viewports/{viewport}/constraints"), change).await
    }

    pub async fn reoptimise(&self, session: u64, viewport: &str, budget: Value) -> (StatusCode, Value) {
        self.post(
            &format!("/sessions/{session}/viewports/{viewport}/reoptimise"),
            json!({ "budget": budget }),
        )
        .await
    }

    /// Long-polls a job until its terminal event and returns every event.
    pub async fn wait_job(&self, job: u64) -> Vec<Value> {
        let deadline = Instant::now() + Duration::from_secs(60);
        let mut events = Vec::new();
        loop {
            let (status, page) = self.get(&format!("/jobs/{job}/events?mode=poll&since={}", events.len())).await;
            assert_eq!(status, StatusCode::OK, "{page}");
            events.extend(page["events"].as_array().expect("events").iter().cloned());
            if page["done"] == json!(true) && events.last().is_some_and(|e| e["phase"] == "finished") {
                return events;
            }
            assert!(Instant::now() < deadline, "job {job} did not finish");
        }
    }

    /// Runs a re-optimisation to completion and returns its terminal event.
    pub async fn reoptimise_done(&self, session: u64, viewport: &str, budget: Value) -> Value {
        let (status, started) = self.reoptimise(session, viewport, budget).await;
        assert_eq!(status, StatusCode::ACCEPTED, "{started}");
        let events = self.wait_job(started["job_id"].as_u64().expect("job id")).await;
        events.last().cloned().expect("terminal event")
    }
}

pub fn session_id(view: &Value) -> u64 {
    view["session_id"].as_u64().expect("session id")
}

pub fn record_id(viewport: &Value) -> u64 {
    viewport["record"]["record_id"].as_u64().expect("record id")
}

pub fn objective(viewport: &Value) -> f64 {
    viewport["record"]["objective"].as_f64().expect("objective")
}

/// Visit labels per vehicle of a viewport's record.
pub fn routes(viewport: &Value) -> Vec<Vec<String>> {
    viewport["record"]["solution"]["routes"]
        .as_array()
        .expect("routes")
        .iter()
        .map(|r| {
            r["visits"]
                .as_array()
                .expect("visits")
                .iter()
                .map(|v| v.as_str().expect("label").to_string())
                .collect()
        })
        .collect()
}

pub fn history_len(history: &Value) -> usize {
    history["bars"].as_array().expect("bars").len()
}
