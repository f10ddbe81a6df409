//! Knowledge-based semantic processing agent: keeps a triple view of broker
//! context, forward-chains rules over it and writes new facts back.

mod agent;
mod runtime;

pub use agent::{value_lexical, Agent, AgentStats};
pub use runtime::{checked_rules, start, AgentConfig, AgentHandle, AgentSubscription};
