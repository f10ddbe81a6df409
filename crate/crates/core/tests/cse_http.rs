mod support;

use std::time::Duration;

use giots::cse::{CseClient, CseClientError, ResourceType, TYPE_HEADER};
use giots::harness::serve_cse;
use serde_json::{json, Value};
use support::{eventually, Capture};

const DSP: &str = "<urn:s> <http://wise-iot.example/mediation#attributeName> \"roomTemperature\" .";

fn status(r: Result<Value, CseClientError>) -> u16 {
    match r {
        Ok(_) => 200,
        Err(CseClientError::Status { status, .. }) => status,
        Err(e) => panic!("unexpected {e}"),
    }
}

#[tokio::test]
async fn crud_over_http() {
    let (svc, _) = serve_cse(0).await.unwrap();
    let c = CseClient::new(svc.url());

    let ae = c
        .create(
            "/cse",
            ResourceType::Ae,
            &json!({"rn": "tempApp", "lbl": ["building-1"]}),
        )
        .await
        .unwrap();
    assert_eq!(ae["ty"], 2);
    assert_eq!(ae["rn"], "tempApp");
    assert_eq!(
        status(c.create("/cse", ResourceType::Ae, &json!({"rn": "tempApp"})).await),
        409
    );

    c.create("/cse/tempApp", ResourceType::Container, &json!({"rn": "room123"}))
        .await
        .unwrap();
    let cin = c
        .create(
            "/cse/tempApp/room123",
            ResourceType::ContentInstance,
            &json!({"con": {"value": 25}}),
        )
        .await
        .unwrap();
    assert_eq!(cin["con"], json!({"value": 25}));
    assert_eq!(cin["pi"], c.retrieve("/cse/tempApp/room123").await.unwrap()["ri"]);

    // contentInstances are immutable; the base cannot be deleted
    let path = format!("/cse/tempApp/room123/{}", cin["rn"].as_str().unwrap());
    assert_eq!(status(c.update(&path, &json!({"lbl": ["x"]})).await), 405);
    assert_eq!(status(c.delete("/cse").await.map(|_| Value::Null)), 405);

    // a contentInstance cannot hold an AE
    assert_eq!(
        status(c.create(&path, ResourceType::Ae, &json!({"rn": "nested"})).await),
        400
    );

    let updated = c.update("/cse/tempApp", &json!({"lbl": ["building-2"]})).await.unwrap();
    assert_eq!(updated["lbl"], json!(["building-2"]));

    c.delete("/cse/tempApp").await.unwrap();
    assert_eq!(status(c.retrieve("/cse/tempApp/room123").await), 404);
    svc.shutdown().await;
}

#[tokio::test]
async fn raw_requests_report_errors_as_json() {
    let (svc, _) = serve_cse(0).await.unwrap();
    let client = reqwest::Client::new();
    let url = format!("{}/cse", svc.url());

    let missing_type = client.post(&url).json(&json!({"rn": "a"})).send().await.unwrap();
    assert_eq!(missing_type.status(), 400);

    let malformed = client
        .post(&url)
        .header(TYPE_HEADER, "2")
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(malformed.status(), 400);
    let body: Value = malformed.json().await.unwrap();
    assert!(body.is_object());

    let created = client
        .post(&url)
        .header(TYPE_HEADER, "2")
        .json(&json!({"rn": "a"}))
        .send()
        .await
        .unwrap();
    assert_eq!(created.status(), 201);
    svc.shutdown().await;
}

#[tokio::test]
async fn semantic_discovery_over_http() {
    let (svc, _) = serve_cse(0).await.unwrap();
    let c = CseClient::new(svc.url());
    c.create("/cse", ResourceType::Ae, &json!({"rn": "tempApp"}))
        .await
        .unwrap();
    for (name, labels) in [("room123", vec!["temperature"]), ("room124", vec!["humidity"])] {
        c.create(
            "/cse/tempApp",
            ResourceType::Container,
            &json!({"rn": name, "lbl": labels}),
        )
        .await
        .unwrap();
    }
    c.create(
        "/cse/tempApp/room123",
        ResourceType::SemanticDescriptor,
        &json!({"rn": "d", "dsp": DSP}),
    )
    .await
    .unwrap();

    let all = c
        .discover("/cse", Some(ResourceType::Container), &[], None)
        .await
        .unwrap();
    assert_eq!(all, ["/cse/tempApp/room123", "/cse/tempApp/room124"]);
    let by_label = c.discover("/cse", None, &["humidity".into()], None).await.unwrap();
    assert_eq!(by_label, ["/cse/tempApp/room124"]);
    let ask = "ASK { ?s <http://wise-iot.example/mediation#attributeName> \"roomTemperature\" }";
    let semantic = c
        .discover("/cse", Some(ResourceType::Container), &[], Some(ask))
        .await
        .unwrap();
    assert_eq!(semantic, ["/cse/tempApp/room123"]);
    let bad = c.discover("/cse", None, &[], Some("ASK {")).await;
    assert!(matches!(bad, Err(CseClientError::Status { status: 400, .. })));
    svc.shutdown().await;
}

#[tokio::test]
async fn subscription_notifies_and_stops_after_delete() {
    let capture = Capture::start().await;
    let (svc, _) = serve_cse(0).await.unwrap();
    let c = CseClient::new(svc.url());
    c.create("/cse", ResourceType::Ae, &json!({"rn": "app"})).await.unwrap();
    c.create("/cse/app", ResourceType::Container, &json!({"rn": "box"}))
        .await
        .unwrap();
    c.create(
        "/cse/app/box",
        ResourceType::Subscription,
        &json!({"rn": "sub", "nu": capture.notify_url()}),
    )
    .await
    .unwrap();
    c.create("/cse/app/box", ResourceType::ContentInstance, &json!({"con": "first"}))
        .await
        .unwrap();
    assert!(eventually(3000, || capture.count() == 1).await);
    let n = &capture.take()[0];
    assert_eq!(n["event"], "childCreated");
    assert_eq!(n["subscriptionRef"], "/cse/app/box/sub");
    assert_eq!(n["resource"]["con"], "first");

    c.delete("/cse/app/box/sub").await.unwrap();
    c.create("/cse/app/box", ResourceType::ContentInstance, &json!({"con": "second"}))
        .await
        .unwrap();
    tokio::time::sleep(Duration::from_millis(300)).await;
    assert_eq!(capture.count(), 1);
    svc.shutdown().await;
}

#[tokio::test]
async fn unreachable_notification_target_does_not_block_creation() {
    let (svc, _) = serve_cse(0).await.unwrap();
    let c = CseClient::new(svc.url());
    c.create("/cse", ResourceType::Ae, &json!({"rn": "app"})).await.unwrap();
    c.create("/cse/app", ResourceType::Container, &json!({"rn": "box"}))
        .await
        .unwrap();
    c.create(
        "/cse/app/box",
        ResourceType::Subscription,
        &json!({"nu": "http://127.0.0.1:9/notify"}),
    )
    .await
    .unwrap();
    let started = std::time::Instant::now();
    for i in 0..5 {
        c.create("/cse/app/box", ResourceType::ContentInstance, &json!({"con": i}))
            .await
            .unwrap();
    }
    assert!(started.elapsed() < Duration::from_secs(2));
    svc.shutdown().await;
}
