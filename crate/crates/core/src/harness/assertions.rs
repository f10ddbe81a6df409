use std::path::Path;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cse::{CseClient, ResourceType};
use crate::http;
use crate::ngsi::{ContextEntity, NgsiClient, QueryContextRequest};

use super::scenario::{resolve, Assertion, AssertionKind};

/// Expected timestamp metadata value meaning "during this run".
pub const NOW: &str = "$now";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AssertionOutcome {
    pub index: usize,
    pub kind: AssertionKind,
    pub passed: bool,
    pub expected: Value,
    pub actual: Value,
    pub message: String,
}

/// Where assertions are evaluated and the time window replay happened in.
pub struct EvalContext<'a> {
    pub base_dir: &'a Path,
    pub cse_url: String,
    pub broker_url: String,
    pub validator_url: String,
    pub replay_started: DateTime<Utc>,
    pub replay_finished: DateTime<Utc>,
    pub default_tolerance_millis: u64,
}

fn scalars_equal(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) if a.is_number() && b.is_number() => x == y,
        _ => a == b,
    }
}

/// Entity sets must agree on ids, types and attribute names; values must be
/// equal and every expected metadata item must be present with an equal
/// value. A `"$now"` timestamp accepts any time in the replay window widened
/// by the tolerance.
pub fn compare_entities(
    expected: &[ContextEntity],
    actual: &[ContextEntity],
    window: (DateTime<Utc>, DateTime<Utc>),
    tolerance_millis: u64,
) -> Result<(), String> {
    let ids = |es: &[ContextEntity]| es.iter().map(|e| e.id.clone()).collect::<Vec<_>>();
    let (mut want, mut got) = (ids(expected), ids(actual));
    want.sort();
    got.sort();
    if want != got {
        return Err(format!("entities {got:?}, expected {want:?}"));
    }
    let tolerance = chrono::Duration::milliseconds(tolerance_millis as i64);
    for exp in expected {
        let act = actual.iter().find(|a| a.id == exp.id).expect("ids compared above");
        if !exp.entity_type.is_empty() && exp.entity_type != act.entity_type {
            return Err(format!(
                "{}: type {}, expected {}",
                exp.id, act.entity_type, exp.entity_type
            ));
        }
        let mut names: Vec<&str> = act.attributes.iter().map(|a| a.name.as_str()).collect();
        let mut want_names: Vec<&str> = exp.attributes.iter().map(|a| a.name.as_str()).collect();
        names.sort();
        want_names.sort();
        if names != want_names {
            return Err(format!("{}: attributes {names:?}, expected {want_names:?}", exp.id));
        }
        for ea in &exp.attributes {
            let aa = act.attribute(&ea.name).expect("names compared above");
            if !scalars_equal(&ea.value, &aa.value) {
                return Err(format!(
                    "{}.{}: value {}, expected {}",
                    exp.id, ea.name, aa.value, ea.value
                ));
            }
            for em in &ea.metadata {
                let Some(am) = aa.metadata(&em.name) else {
                    return Err(format!("{}.{}: missing metadata {}", exp.id, ea.name, em.name));
                };
                if em.value == json!(NOW) {
                    let ts = am
                        .value
                        .as_str()
                        .and_then(|s| DateTime::parse_from_rfc3339(s).ok())
                        .map(|t| t.with_timezone(&Utc))
                        .ok_or_else(|| format!("{}.{}: {} is not a timestamp", exp.id, ea.name, am.value))?;
                    if ts < window.0 - tolerance || ts > window.1 + tolerance {
                        return Err(format!(
                            "{}.{}: timestamp {ts} outside the replay window",
                            exp.id, ea.name
                        ));
                    }
                } else if !scalars_equal(&em.value, &am.value) {
                    return Err(format!(
                        "{}.{}: metadata {} = {}, expected {}",
                        exp.id, ea.name, em.name, am.value, em.value
                    ));
                }
            }
        }
    }
    Ok(())
}

pub async fn evaluate(index: usize, a: &Assertion, ctx: &EvalContext<'_>) -> AssertionOutcome {
    let outcome = |passed: bool, actual: Value, message: String| AssertionOutcome {
        index,
        kind: a.kind,
        passed,
        expected: a.expected.clone(),
        actual,
        message,
    };
    match a.kind {
        AssertionKind::QueryContextEquals => {
            let req: QueryContextRequest = match serde_json::from_value(a.request.clone()) {
                Ok(r) => r,
                Err(e) => return outcome(false, Value::Null, format!("bad request: {e}")),
            };
            let expected: Vec<ContextEntity> = match serde_json::from_value(a.expected.clone()) {
                Ok(v) => v,
                Err(e) => return outcome(false, Value::Null, format!("bad expected payload: {e}")),
            };
            match NgsiClient::new(&ctx.broker_url).query(&req).await {
                Ok(actual) => {
                    let tol = a.tolerance_millis.unwrap_or(ctx.default_tolerance_millis);
                    let verdict = compare_entities(&expected, &actual, (ctx.replay_started, ctx.replay_finished), tol);
                    let actual = serde_json::to_value(&actual).unwrap_or_default();
                    match verdict {
                        Ok(()) => outcome(true, actual, "ok".into()),
                        Err(diff) => outcome(false, actual, diff),
                    }
                }
                Err(e) => outcome(false, Value::Null, e.to_string()),
            }
        }
        AssertionKind::DiscoverContains => {
            let r = &a.request;
            let root = r["root"].as_str().unwrap_or("/cse");
            let ty = r["ty"].as_u64().and_then(|c| ResourceType::from_code(c as u16));
            let labels: Vec<String> = r["lbl"]
                .as_array()
                .map(|l| l.iter().filter_map(|s| s.as_str().map(str::to_string)).collect())
                .unwrap_or_default();
            let expected: Vec<String> = serde_json::from_value(a.expected.clone()).unwrap_or_default();
            match CseClient::new(&ctx.cse_url)
                .discover(root, ty, &labels, r["smf"].as_str())
                .await
            {
                Ok(paths) => {
                    let missing: Vec<&String> = expected.iter().filter(|p| !paths.contains(p)).collect();
                    let msg = if missing.is_empty() {
                        "ok".to_string()
                    } else {
                        format!("missing {missing:?}")
                    };
                    outcome(missing.is_empty(), json!(paths), msg)
                }
                Err(e) => outcome(false, Value::Null, e.to_string()),
            }
        }
        AssertionKind::ValidationPasses => {
            let r = &a.request;
            let kind = r["kind"].as_str().unwrap_or_default();
            let payload = match (r["payload"].as_str(), r["file"].as_str()) {
                (Some(p), _) => p.to_string(),
                (None, Some(f)) => match std::fs::read_to_string(resolve(ctx.base_dir, f)) {
                    Ok(t) => t,
                    Err(e) => return outcome(false, Value::Null, format!("reading {f}: {e}")),
                },
                _ => return outcome(false, Value::Null, "request needs payload or file".into()),
            };
            let want = a.expected.as_bool().unwrap_or(true);
            let url = http::join_url(&ctx.validator_url, &format!("/validate/{kind}"));
            let resp = http::client().post(url).body(payload).send().await;
            let report: Result<Value, String> = match resp {
                Ok(r) if r.status().is_success() => r.json().await.map_err(|e| e.to_string()),
                Ok(r) => Err(format!("validator answered {}", r.status())),
                Err(e) => Err(e.to_string()),
            };
            match report {
                Ok(report) => {
                    let passed = report["passed"].as_bool() == Some(want);
                    let msg = if passed {
                        "ok".into()
                    } else {
                        format!("report passed={}, expected {want}", report["passed"])
                    };
                    outcome(passed, report, msg)
                }
                Err(e) => outcome(false, Value::Null, e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngsi::{ContextAttribute, ContextMetadata};

    fn reading(v: Value, ts: &str) -> ContextEntity {
        ContextEntity::new("room123", "http://x/MeetingRoom").with_attribute(
            ContextAttribute::new("roomTemperature", v)
                .with_metadata(ContextMetadata::new("unit", "string", json!("kelvin")))
                .with_metadata(ContextMetadata::new("timestamp", "ISO8601", json!(ts))),
        )
    }

    fn window() -> (DateTime<Utc>, DateTime<Utc>) {
        let t = DateTime::parse_from_rfc3339("2016-10-16T12:00:00Z")
            .unwrap()
            .with_timezone(&Utc);
        (t, t + chrono::Duration::seconds(1))
    }

    #[test]
    fn matching_entities_pass() {
        let exp = [reading(json!(298.15), NOW)];
        let act = [reading(json!(298.15), "2016-10-16T12:00:00.500Z")];
        assert!(compare_entities(&exp, &act, window(), 0).is_ok());
    }

    #[test]
    fn value_mismatch_reports_diff() {
        let exp = [reading(json!(25), NOW)];
        let act = [reading(json!(298.15), "2016-10-16T12:00:00.500Z")];
        let err = compare_entities(&exp, &act, window(), 0).unwrap_err();
        assert!(err.contains("298.15") && err.contains("25"), "{err}");
    }

    #[test]
    fn timestamps_outside_window_fail() {
        let exp = [reading(json!(1), NOW)];
        let act = [reading(json!(1.0), "2016-10-16T12:00:05Z")];
        assert!(compare_entities(&exp, &act, window(), 1000).is_err());
        assert!(compare_entities(&exp, &act, window(), 5000).is_ok());
    }
}
