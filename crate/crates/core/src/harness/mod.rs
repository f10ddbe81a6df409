//! Scenario runner and service launcher: boots the services over their
//! wire protocols, replays simulated sensors and checks assertions.

mod assertions;
mod deploy;
mod scenario;
mod serve;

pub use assertions::{compare_entities, evaluate, AssertionOutcome, EvalContext, NOW};
pub use deploy::{run_scenario, Deployment, ScenarioReport, EXIT_ASSERTION_FAILED, EXIT_PASSED, EXIT_SETUP_FAILED};
pub use scenario::{resolve, Assertion, AssertionKind, Scenario, Sensor, SmgSection, COMPONENTS};
pub use serve::{
    read_ontology, read_rules, serve, serve_broker, serve_cse, serve_knowledge, serve_validator, Component,
    ServeOptions,
};
