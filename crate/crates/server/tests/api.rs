mod common;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use v2v_core::model::{Corpus, OutputKind};
use v2v_core::synth::{random_corpus, small_fixture, CorpusShape};
use v2v_server::AppState;

use common::{bearer, loaded_state, spawn, TOKEN};

fn corpus(voices: usize) -> Corpus {
    random_corpus(&mut ChaCha8Rng::seed_from_u64(7), &CorpusShape { voices, ..CorpusShape::default() })
}

async fn get(c: &Client, url: String) -> (StatusCode, Value) {
    let r = c.get(url).send().await.unwrap();
    let status = r.status();
    (status, r.json().await.unwrap_or(Value::Null))
}

#[tokio::test]
async fn empty_dataset_is_unavailable_until_import() {
    let base = spawn(AppState::in_memory(Some(TOKEN.into()))).await;
    let c = Client::new();
    let (status, body) = get(&c, format!("{base}/api/project")).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["code"], "no_dataset");
    assert_eq!(get(&c, format!("{base}/api/health")).await.0, StatusCode::OK);

    let bundle = v2v_core::store::ImportBundle::from_corpus(&small_fixture()).to_text();
    let r = c.post(format!("{base}/api/admin/import")).header("authorization", bearer()).body(bundle).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let (status, project) = get(&c, format!("{base}/api/project")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(project["phases"].as_array().unwrap().len(), 3);
    assert_eq!(project["stats"]["total_voices"], 24);
}

#[tokio::test]
async fn voice_pages_cover_the_filtered_set() {
    let c = corpus(130);
    let base = spawn(loaded_state(&c)).await;
    let client = Client::new();
    let topic = c.topics[0].id.as_str();
    let expected: BTreeSet<&str> = c
        .voices
        .iter()
        .filter(|v| v.topic_ids.iter().any(|t| t.as_str() == topic) && !v.output_ids.is_empty())
        .map(|v| v.id.as_str())
        .collect();

    let mut seen = Vec::new();
    let mut offset = 0;
    loop {
        let (status, page) =
            get(&client, format!("{base}/api/voices?topic_id={topic}&cited=true&limit=7&offset={offset}")).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(page["total"], expected.len());
        let items = page["items"].as_array().unwrap();
        if items.is_empty() {
            break;
        }
        seen.extend(items.iter().map(|v| v["id"].as_str().unwrap().to_owned()));
        offset += 7;
    }
    assert_eq!(seen.len(), expected.len());
    assert_eq!(seen.iter().map(String::as_str).collect::<BTreeSet<_>>(), expected);

    let (status, page) = get(&client, format!("{base}/api/voices?topic_id=nope")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["total"], 0);

    for bad in ["limit=0", "limit=500", "colour=red", "sort=random", "cited=maybe"] {
        let (status, body) = get(&client, format!("{base}/api/voices?{bad}")).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert_eq!(body["status"], 400);
    }
}

#[tokio::test]
async fn voice_card_carries_names_and_revision() {
    let c = small_fixture();
    let base = spawn(loaded_state(&c)).await;
    let client = Client::new();
    let v = c.voices.iter().find(|v| !v.topic_ids.is_empty() && !v.output_ids.is_empty()).unwrap();
    let r = client.get(format!("{base}/api/voices/{}", v.id)).send().await.unwrap();
    assert_eq!(r.headers()["etag"], "\"1\"");
    let card: Value = r.json().await.unwrap();
    assert_eq!(card["revision"], 1);
    assert_eq!(card["topics"].as_array().unwrap().len(), v.topic_ids.len());
    assert_eq!(card["cited_outputs"].as_array().unwrap().len(), v.output_ids.len());
    assert!(card["event_name"].is_string());
    assert_eq!(get(&client, format!("{base}/api/voices/ghost")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn outputs_filter_by_kind_and_goal() {
    let c = corpus(60);
    let base = spawn(loaded_state(&c)).await;
    let client = Client::new();
    let (_, goals) = get(&client, format!("{base}/api/outputs?kind=goal")).await;
    let goals = goals.as_array().unwrap();
    assert_eq!(goals.len(), c.outputs.iter().filter(|o| o.kind == OutputKind::Goal).count());
    assert!(goals.iter().all(|g| g["kind"] == "goal"));

    let goal = c.outputs.iter().find(|o| o.kind == OutputKind::Goal && !o.next_steps.is_empty()).unwrap();
    let (_, recs) = get(&client, format!("{base}/api/outputs?goal_id={}", goal.id)).await;
    let got: BTreeSet<&str> = recs.as_array().unwrap().iter().map(|o| o["id"].as_str().unwrap()).collect();
    let want: BTreeSet<&str> = c
        .outputs
        .iter()
        .filter(|o| o.kind == OutputKind::Recommendation && o.sparked_by.contains(&goal.id))
        .map(|o| o.id.as_str())
        .collect();
    assert_eq!(got, want);

    let insight = c.outputs.iter().find(|o| o.kind == OutputKind::Insight).unwrap();
    assert_eq!(get(&client, format!("{base}/api/outputs?goal_id={}", insight.id)).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&client, format!("{base}/api/outputs?kind=poem")).await.0, StatusCode::BAD_REQUEST);

    let (_, one) = get(&client, format!("{base}/api/outputs/{}", goal.id)).await;
    let cited = c.voices.iter().filter(|v| v.output_ids.contains(&goal.id)).count();
    assert_eq!(one["cited_count"], cited);
    assert_eq!(one["topic_distribution"]["total_cited_voices"], cited);
}

#[tokio::test]
async fn clusters_account_for_every_geotagged_match() {
    let c = corpus(200);
    let base = spawn(loaded_state(&c)).await;
    let client = Client::new();
    let event = c.events[0].id.as_str();
    let want = c.voices.iter().filter(|v| v.event_id.as_str() == event && v.coordinates.is_some()).count();
    for zoom in [3, 10, 18] {
        let (status, body) = get(&client, format!("{base}/api/map/clusters?zoom={zoom}&event_id={event}")).await;
        assert_eq!(status, StatusCode::OK);
        let sum: usize = body["clusters"]
            .as_array()
            .unwrap()
            .iter()
            .map(|k| k["member_voice_ids"].as_array().unwrap().len())
            .sum();
        assert_eq!(sum, want);
        assert_eq!(body["total_points"], want);
    }
    for bad in ["", "zoom=23", "zoom=x", "zoom=4&bbox=1,2,3"] {
        assert_eq!(get(&client, format!("{base}/api/map/clusters?{bad}")).await.0, StatusCode::BAD_REQUEST, "{bad}");
    }
}

#[tokio::test]
async fn layout_by_scheme() {
    let c = corpus(80);
    let base = spawn(loaded_state(&c)).await;
    let client = Client::new();
    let (_, body) = get(&client, format!("{base}/api/cluster-layout?scheme=goal")).await;
    let circles = body["circles"].as_array().unwrap();
    assert!(!circles.is_empty());
    assert!(circles.iter().all(|k| k["category_id"].as_str().unwrap().starts_with("go")));
    assert_eq!(get(&client, format!("{base}/api/cluster-layout?scheme=colour")).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn voice_patch_flow() {
    let c = small_fixture();
    let base = spawn(loaded_state(&c)).await;
    let client = Client::new();
    let v = &c.voices[0];
    let url = format!("{base}/api/voices/{}", v.id);
    let topics = json!({"topic_ids": [c.topics[1].id.as_str()]});

    let r = client.patch(&url).json(&topics).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::FORBIDDEN);
    let r = client.patch(&url).header("authorization", "Bearer wrong").json(&topics).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNAUTHORIZED);
    let r = client.patch(&url).header("authorization", bearer()).json(&topics).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::PRECONDITION_REQUIRED);

    let r = client.patch(&url).header("authorization", bearer()).header("if-match", "\"1\"").json(&topics).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    assert_eq!(r.headers()["etag"], "\"2\"");
    let card: Value = r.json().await.unwrap();
    assert_eq!(card["topic_ids"], json!([c.topics[1].id.as_str()]));

    let r = client.patch(&url).header("authorization", bearer()).header("if-match", "1").json(&topics).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CONFLICT);
    assert_eq!(r.headers()["content-type"], "application/problem+json");
    let problem: Value = r.json().await.unwrap();
    assert_eq!(problem["code"], "revision_conflict");
    assert_eq!(problem["current_revision"], 2);

    let r = client
        .patch(&url)
        .header("authorization", bearer())
        .header("if-match", "W/\"2\"")
        .json(&json!({"output_ids": ["ghost"]}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let problem: Value = r.json().await.unwrap();
    assert!(!problem["issues"].as_array().unwrap().is_empty());

    let r = client
        .patch(&url)
        .header("authorization", bearer())
        .header("if-match", "2")
        .json(&json!({"text": "rewritten"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
    assert_eq!(get(&client, url).await.1["revision"], 2);
}

#[tokio::test]
async fn planner_creates_and_edits_outputs() {
    let c = small_fixture();
    let base = spawn(loaded_state(&c)).await;
    let client = Client::new();
    let phase = c.phases()[2].id.as_str();
    let body = json!({"kind": "insight", "title": "Shade on school routes", "phase_id": phase});
    let r = client.post(format!("{base}/api/outputs")).header("authorization", bearer()).json(&body).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    let location = r.headers()["location"].to_str().unwrap().to_owned();
    let created: Value = r.json().await.unwrap();
    assert_eq!(location, format!("/api/outputs/{}", created["id"].as_str().unwrap()));
    assert_eq!(created["revision"], 1);

    let r = client
        .patch(format!("{base}{location}"))
        .header("authorization", bearer())
        .header("if-match", "\"1\"")
        .json(&json!({"title": "Shade and water on school routes"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let edited: Value = r.json().await.unwrap();
    assert_eq!(edited["revision"], 2);
    assert_eq!(edited["title"], "Shade and water on school routes");

    let r = client
        .post(format!("{base}/api/topics"))
        .header("authorization", bearer())
        .json(&json!({"name": "Street Trees"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    let topic: Value = r.json().await.unwrap();
    assert_eq!(topic["id"], "street-trees");
    assert_eq!(topic["color_index"], c.topics.len());
}

#[tokio::test]
async fn analytics_ingest_is_idempotent_and_report_is_planner_only() {
    let base = spawn(loaded_state(&small_fixture())).await;
    let client = Client::new();
    let events = json!([
        {"session_id": "s1", "timestamp": "2025-03-03T14:00:00Z", "kind": "page_view", "page": "home"},
        {"session_id": "s1", "timestamp": "2025-03-03T14:00:20Z", "kind": "page_view", "page": "voices_list"},
        {"session_id": "s1", "timestamp": "2025-03-03T14:00:30Z", "kind": "voice_card_view", "page": "voices_list", "subject_id": "v00001"},
        {"session_id": "s1", "timestamp": "2025-03-03T14:00:40Z", "kind": "bogus", "page": "home"}
    ]);
    let first: Value =
        client.post(format!("{base}/api/analytics/events")).json(&events).send().await.unwrap().json().await.unwrap();
    assert_eq!(first["accepted"], 3);
    assert_eq!(first["rejected"].as_array().unwrap().len(), 1);
    let again: Value =
        client.post(format!("{base}/api/analytics/events")).json(&events).send().await.unwrap().json().await.unwrap();
    assert_eq!(again["accepted"], 0);
    assert_eq!(again["duplicates"], 3);

    let beat = "{\"session_id\":\"s1\",\"timestamp\":\"2025-03-03T14:00:05Z\",\"page\":\"home\",\"device_type\":\"mobile\",\"language\":\"en\"}\n";
    let r = client.post(format!("{base}/api/analytics/heartbeats")).body(beat).send().await.unwrap();
    assert_eq!(r.json::<Value>().await.unwrap()["accepted"], 1);

    assert_eq!(get(&client, format!("{base}/api/analytics/report")).await.0, StatusCode::FORBIDDEN);
    let r = client
        .get(format!("{base}/api/analytics/report?outlier_filter=false"))
        .header("authorization", bearer())
        .send()
        .await
        .unwrap();
    let report: Value = r.json().await.unwrap();
    assert_eq!(report["n_records"], 4);
    assert_eq!(report["n_sessions_after_filter"], 1);
    assert_eq!(report["total_transitions"], 1);
    assert_eq!(report["voice_card_view_share"], 1.0);

    let r = client
        .get(format!("{base}/api/analytics/report.csv?table=transitions&outlier_filter=false"))
        .header("authorization", bearer())
        .send()
        .await
        .unwrap();
    assert!(r.headers()["content-type"].to_str().unwrap().starts_with("text/csv"));
    let csv = r.text().await.unwrap();
    assert!(csv.lines().any(|l| l.starts_with("home,voices_list,1")), "{csv}");

    let r = client.get(format!("{base}/api/analytics/report?from=2025-03-05&to=2025-03-01")).header("authorization", bearer()).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn feedback_is_public() {
    let base = spawn(loaded_state(&small_fixture())).await;
    let client = Client::new();
    let r = client.post(format!("{base}/api/feedback")).json(&json!({"rating": 4, "comment": "useful"})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    assert_eq!(r.json::<Value>().await.unwrap()["id"], "fb000001");
    let r = client.post(format!("{base}/api/feedback")).json(&json!({})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn admin_export_import_round_trip() {
    let c = corpus(150);
    let base = spawn(loaded_state(&c)).await;
    let client = Client::new();
    let export = |base: String| {
        let client = client.clone();
        async move {
            client.get(format!("{base}/api/admin/export")).header("authorization", bearer()).send().await.unwrap().text().await.unwrap()
        }
    };
    let first = export(base.clone()).await;
    let other = spawn(AppState::in_memory(Some(TOKEN.into()))).await;
    let r = client.post(format!("{other}/api/admin/import")).header("authorization", bearer()).body(first.clone()).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    assert_eq!(export(other.clone()).await, first);

    let mut broken: Value = serde_json::from_str(&first).unwrap();
    broken["voices"][0]["event_id"] = json!("ghost");
    let r = client
        .post(format!("{other}/api/admin/import?mode=merge"))
        .header("authorization", bearer())
        .body(broken.to_string())
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(export(other).await, first, "rejected import leaves the dataset unchanged");
}
