use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::smg::{Mode, ProcessSpec};

/// Scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Scenario {
    pub ontology_file: String,
    /// Component name to port; missing or 0 means an ephemeral port.
    #[serde(default)]
    pub services: BTreeMap<String, u16>,
    #[serde(default)]
    pub sensors: Vec<Sensor>,
    #[serde(default)]
    pub smg: Option<SmgSection>,
    /// Agent config files.
    #[serde(default)]
    pub agents: Vec<String>,
    #[serde(default)]
    pub assertions: Vec<Assertion>,
    #[serde(default = "default_quiescence")]
    pub quiescence_millis: u64,
}

fn default_quiescence() -> u64 {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Sensor {
    pub name: String,
    pub container_path: String,
    /// Inline N-Triples descriptor.
    #[serde(default)]
    pub descriptor: Option<String>,
    #[serde(default)]
    pub descriptor_file: Option<String>,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub value_sequence: Vec<Value>,
    #[serde(default)]
    pub period_millis: u64,
}

/// Gateway settings; service URLs are filled in by the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SmgSection {
    pub mode: Mode,
    #[serde(default)]
    pub rescan_period_millis: Option<u64>,
    #[serde(default)]
    pub processes: Option<Vec<ProcessSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AssertionKind {
    QueryContextEquals,
    DiscoverContains,
    ValidationPasses,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Assertion {
    pub kind: AssertionKind,
    pub request: Value,
    #[serde(default)]
    pub expected: Value,
    #[serde(default)]
    pub tolerance_millis: Option<u64>,
}

pub const COMPONENTS: [&str; 5] = ["knowledge", "cse", "broker", "validator", "smg"];

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
    }

    pub fn port(&self, component: &str) -> u16 {
        self.services.get(component).copied().unwrap_or(0)
    }

    /// Referenced files exist, ports are distinct and known, sensors are
    /// well formed.
    pub fn check(&self, base: &Path) -> Result<(), String> {
        let onto = resolve(base, &self.ontology_file);
        if !onto.is_file() {
            return Err(format!("ontology file {} not found", onto.display()));
        }
        let mut seen = BTreeMap::new();
        for (name, port) in &self.services {
            if !COMPONENTS.contains(&name.as_str()) {
                return Err(format!("unknown service {name:?}"));
            }
            if *port != 0 {
                if let Some(other) = seen.insert(*port, name) {
                    return Err(format!("services {other} and {name} share port {port}"));
                }
            }
        }
        for agent in &self.agents {
            let p = resolve(base, agent);
            if !p.is_file() {
                return Err(format!("agent config {} not found", p.display()));
            }
        }
        for s in &self.sensors {
            if !s.container_path.starts_with("/cse/") || s.container_path.ends_with('/') {
                return Err(format!(
                    "sensor {}: container path must look like /cse/<ae>/<container>",
                    s.name
                ));
            }
            if let Some(f) = &s.descriptor_file {
                if !resolve(base, f).is_file() {
                    return Err(format!("sensor {}: descriptor file {f} not found", s.name));
                }
            }
        }
        Ok(())
    }
}

pub fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
