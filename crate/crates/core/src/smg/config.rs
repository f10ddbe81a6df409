use std::path::Path;

use serde::{Deserialize, Serialize};

use super::process::{default_library, ProcessSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Push,
    Pull,
}

/// Gateway configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GatewayConfig {
    pub cse_url: String,
    pub broker_url: String,
    #[serde(default)]
    pub knowledge_url: Option<String>,
    pub mode: Mode,
    #[serde(default = "default_rescan")]
    pub rescan_period_millis: u64,
    /// Port for the notification and provider endpoints; 0 picks one.
    #[serde(default)]
    pub port: u16,
    /// Address the CSE and broker use to reach the gateway. Defaults to the
    /// bound local address.
    #[serde(default)]
    pub callback_url: Option<String>,
    #[serde(default = "default_root")]
    pub discovery_root: String,
    #[serde(default = "default_library")]
    pub processes: Vec<ProcessSpec>,
}

fn default_rescan() -> u64 {
    5000
}

fn default_root() -> String {
    "/cse".to_string()
}

impl GatewayConfig {
    pub fn new(cse_url: &str, broker_url: &str, mode: Mode) -> Self {
        GatewayConfig {
            cse_url: cse_url.to_string(),
            broker_url: broker_url.to_string(),
            knowledge_url: None,
            mode,
            rescan_period_millis: default_rescan(),
            port: 0,
            callback_url: None,
            discovery_root: default_root(),
            processes: default_library(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
