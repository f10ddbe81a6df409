use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context};
use chrono::Utc;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cse::{CseClient, CseClientError, ResourceType};
use crate::http::{self, ServiceHandle};
use crate::knowledge::{KnowledgeBase, Ontology, RemoteHierarchy};
use crate::kspa::{self, AgentConfig, AgentHandle};
use crate::smg::{self, GatewayConfig, GatewayHandle};
use crate::validate::Validator;

use super::assertions::{evaluate, AssertionOutcome, EvalContext};
use super::scenario::{resolve, Scenario, Sensor};
use super::serve::{read_ontology, serve_broker, serve_cse, serve_knowledge, serve_validator};

pub const EXIT_PASSED: i32 = 0;
pub const EXIT_ASSERTION_FAILED: i32 = 1;
pub const EXIT_SETUP_FAILED: i32 = 2;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioReport {
    pub passed: bool,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub setup_error: Option<String>,
    pub duration_millis: u64,
    pub assertions: Vec<AssertionOutcome>,
}

/// Every service a scenario runs, torn down in reverse boot order.
pub struct Deployment {
    pub knowledge: ServiceHandle,
    pub cse: ServiceHandle,
    pub broker: ServiceHandle,
    pub validator: ServiceHandle,
    pub smg: Option<GatewayHandle>,
    pub agents: Vec<AgentHandle>,
}

/// Services booted so far; lets a failed boot stop what already runs.
#[derive(Default)]
struct Partial {
    services: Vec<ServiceHandle>,
    smg: Option<GatewayHandle>,
    agents: Vec<AgentHandle>,
}

impl Partial {
    async fn shutdown(self) {
        for a in self.agents.into_iter().rev() {
            a.shutdown().await;
        }
        if let Some(g) = self.smg {
            g.shutdown().await;
        }
        for s in self.services.into_iter().rev() {
            s.shutdown().await;
        }
    }
}

impl Deployment {
    /// Boots knowledge, CSE, broker, validator, gateway and agents in that
    /// order. The ontology reaches the knowledge server over HTTP.
    pub async fn boot(scenario: &Scenario, base: &Path) -> anyhow::Result<Deployment> {
        let mut partial = Partial::default();
        match Self::boot_into(scenario, base, &mut partial).await {
            Ok(()) => {
                let mut services = partial.services.into_iter();
                let mut next = || services.next().expect("four services booted");
                Ok(Deployment {
                    knowledge: next(),
                    cse: next(),
                    broker: next(),
                    validator: next(),
                    smg: partial.smg,
                    agents: partial.agents,
                })
            }
            Err(e) => {
                partial.shutdown().await;
                Err(e)
            }
        }
    }

    async fn boot_into(scenario: &Scenario, base: &Path, partial: &mut Partial) -> anyhow::Result<()> {
        let onto_path = resolve(base, &scenario.ontology_file);
        let onto_text =
            std::fs::read_to_string(&onto_path).with_context(|| format!("reading {}", onto_path.display()))?;
        let reference: Ontology = read_ontology(&onto_path)?;

        let knowledge = serve_knowledge(scenario.port("knowledge"), KnowledgeBase::default()).await?;
        let knowledge_url = knowledge.url();
        partial.services.push(knowledge);
        let resp = http::client()
            .post(http::join_url(&knowledge_url, "/ontology"))
            .body(onto_text)
            .send()
            .await
            .context("loading the ontology")?;
        if !resp.status().is_success() {
            bail!(
                "knowledge server rejected the ontology: {}",
                resp.text().await.unwrap_or_default()
            );
        }

        let (cse, _) = serve_cse(scenario.port("cse")).await?;
        let cse_url = cse.url();
        partial.services.push(cse);
        let (broker, _) = serve_broker(scenario.port("broker"), Arc::new(RemoteHierarchy::new(&knowledge_url))).await?;
        let broker_url = broker.url();
        partial.services.push(broker);
        let validator = Validator {
            reference,
            ..Validator::default()
        };
        partial
            .services
            .push(serve_validator(scenario.port("validator"), validator).await?);

        if let Some(section) = &scenario.smg {
            let mut cfg = GatewayConfig::new(&cse_url, &broker_url, section.mode);
            cfg.knowledge_url = Some(knowledge_url.clone());
            cfg.port = scenario.port("smg");
            if let Some(period) = section.rescan_period_millis {
                cfg.rescan_period_millis = period;
            }
            if let Some(processes) = &section.processes {
                cfg.processes = processes.clone();
            }
            partial.smg = Some(smg::start(cfg).await?);
        }

        for file in &scenario.agents {
            let mut cfg = AgentConfig::load(&resolve(base, file))?;
            cfg.broker_url = broker_url.clone();
            partial.agents.push(
                kspa::start(cfg)
                    .await
                    .with_context(|| format!("starting agent {file}"))?,
            );
        }
        Ok(())
    }

    pub fn cse_url(&self) -> String {
        self.cse.url()
    }

    pub fn broker_url(&self) -> String {
        self.broker.url()
    }

    /// Creates each sensor's AE, container and semantic descriptor, then
    /// asks the gateway to re-scan so it picks them up.
    pub async fn setup_sensors(&self, sensors: &[Sensor], base: &Path) -> anyhow::Result<()> {
        let cse = CseClient::new(self.cse_url());
        for s in sensors {
            let descriptor = match (&s.descriptor, &s.descriptor_file) {
                (Some(d), _) => Some(d.clone()),
                (None, Some(f)) => Some(
                    std::fs::read_to_string(resolve(base, f))
                        .with_context(|| format!("sensor {}: reading {f}", s.name))?,
                ),
                (None, None) => None,
            };
            let (ae_path, container) = split_container(&s.container_path)
                .ok_or_else(|| anyhow!("sensor {}: bad container path {}", s.name, s.container_path))?;
            let ae_name = ae_path.rsplit('/').next().unwrap_or_default();
            tolerate_conflict(cse.create("/cse", ResourceType::Ae, &json!({ "rn": ae_name })).await)
                .with_context(|| format!("sensor {}: creating {ae_path}", s.name))?;
            cse.create(
                ae_path,
                ResourceType::Container,
                &json!({ "rn": container, "lbl": s.labels }),
            )
            .await
            .with_context(|| format!("sensor {}: creating {}", s.name, s.container_path))?;
            if let Some(dsp) = descriptor {
                cse.create(
                    &s.container_path,
                    ResourceType::SemanticDescriptor,
                    &json!({ "rn": "descriptor", "dsp": dsp }),
                )
                .await
                .with_context(|| format!("sensor {}: creating its descriptor", s.name))?;
            }
        }
        if let Some(smg) = &self.smg {
            smg.gateway.scan().await.context("gateway scan")?;
        }
        Ok(())
    }

    /// Posts each sensor's values as `{"value": v}` content instances. The
    /// i-th value of a sensor is due at i * periodMillis; ties go in sensor
    /// order.
    pub async fn replay(&self, sensors: &[Sensor]) -> anyhow::Result<()> {
        let cse = CseClient::new(self.cse_url());
        let mut events: Vec<(u64, usize, &Value)> = sensors
            .iter()
            .enumerate()
            .flat_map(|(si, s)| {
                s.value_sequence
                    .iter()
                    .enumerate()
                    .map(move |(i, v)| (i as u64 * s.period_millis, si, v))
            })
            .collect();
        events.sort_by_key(|(due, si, _)| (*due, *si));
        let start = Instant::now();
        for (due, si, value) in events {
            let wait = Duration::from_millis(due).saturating_sub(start.elapsed());
            if !wait.is_zero() {
                tokio::time::sleep(wait).await;
            }
            let sensor = &sensors[si];
            cse.create(
                &sensor.container_path,
                ResourceType::ContentInstance,
                &json!({ "con": { "value": value } }),
            )
            .await
            .with_context(|| format!("sensor {}: posting a reading", sensor.name))?;
        }
        Ok(())
    }

    pub async fn shutdown(self) {
        Partial {
            services: vec![self.knowledge, self.cse, self.broker, self.validator],
            smg: self.smg,
            agents: self.agents,
        }
        .shutdown()
        .await
    }
}

fn split_container(path: &str) -> Option<(&str, &str)> {
    let (parent, name) = path.rsplit_once('/')?;
    let ae = parent.strip_prefix("/cse/")?;
    (!ae.is_empty() && !ae.contains('/') && !name.is_empty()).then_some((parent, name))
}

fn tolerate_conflict(r: Result<Value, CseClientError>) -> Result<(), CseClientError> {
    match r {
        Ok(_) | Err(CseClientError::Status { status: 409, .. }) => Ok(()),
        Err(e) => Err(e),
    }
}

fn setup_failure(started: Instant, message: String) -> ScenarioReport {
    ScenarioReport {
        passed: false,
        exit_code: EXIT_SETUP_FAILED,
        setup_error: Some(message),
        duration_millis: started.elapsed().as_millis() as u64,
        assertions: Vec::new(),
    }
}

/// Runs a scenario file end to end and tears everything down.
pub async fn run_scenario(path: &Path) -> ScenarioReport {
    let started = Instant::now();
    let scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => return setup_failure(started, e),
    };
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if let Err(e) = scenario.check(&base) {
        return setup_failure(started, e);
    }
    let deployment = match Deployment::boot(&scenario, &base).await {
        Ok(d) => d,
        Err(e) => return setup_failure(started, format!("{e:#}")),
    };
    let report = drive(&scenario, &base, &deployment, started).await;
    deployment.shutdown().await;
    match report {
        Ok(mut report) => {
            report.duration_millis = started.elapsed().as_millis() as u64;
            report
        }
        Err(e) => setup_failure(started, format!("{e:#}")),
    }
}

async fn drive(scenario: &Scenario, base: &Path, d: &Deployment, started: Instant) -> anyhow::Result<ScenarioReport> {
    d.setup_sensors(&scenario.sensors, base).await?;
    let replay_started = Utc::now();
    d.replay(&scenario.sensors).await?;
    let replay_finished = Utc::now();
    tokio::time::sleep(Duration::from_millis(scenario.quiescence_millis)).await;

    let ctx = EvalContext {
        base_dir: base,
        cse_url: d.cse_url(),
        broker_url: d.broker_url(),
        validator_url: d.validator.url(),
        replay_started,
        replay_finished,
        default_tolerance_millis: scenario.quiescence_millis,
    };
    let mut outcomes = Vec::new();
    for (i, a) in scenario.assertions.iter().enumerate() {
        outcomes.push(evaluate(i, a, &ctx).await);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    Ok(ScenarioReport {
        passed,
        exit_code: if passed { EXIT_PASSED } else { EXIT_ASSERTION_FAILED },
        setup_error: None,
        duration_millis: started.elapsed().as_millis() as u64,
        assertions: outcomes,
    })
}
