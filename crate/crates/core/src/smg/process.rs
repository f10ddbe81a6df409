use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rdf::Graph;
use crate::sparql::{evaluate, parse_sparql, Query, SparqlSyntaxError};

use super::convert::Routine;

/// A transformation process as written in a gateway configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessSpec {
    pub process_id: String,
    pub match_query: String,
    pub conversion_id: String,
    #[serde(default)]
    pub priority: i64,
}

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("process {process}: match query: {source}")]
    Query { process: String, source: SparqlSyntaxError },
    #[error("process {process}: unknown conversion routine {conversion:?}")]
    UnknownRoutine { process: String, conversion: String },
}

#[derive(Debug, Clone)]
pub struct Process {
    pub id: String,
    pub query: Query,
    pub routine: Routine,
    pub priority: i64,
}

impl Process {
    pub fn from_spec(spec: &ProcessSpec) -> Result<Process, ProcessError> {
        let query = parse_sparql(&spec.match_query).map_err(|source| ProcessError::Query {
            process: spec.process_id.clone(),
            source,
        })?;
        let routine = Routine::parse(&spec.conversion_id).ok_or_else(|| ProcessError::UnknownRoutine {
            process: spec.process_id.clone(),
            conversion: spec.conversion_id.clone(),
        })?;
        Ok(Process {
            id: spec.process_id.clone(),
            query,
            routine,
            priority: spec.priority,
        })
    }

    pub fn matches(&self, descriptor: &Graph) -> bool {
        evaluate(&self.query, descriptor).matched()
    }
}

pub fn load_library(specs: &[ProcessSpec]) -> Result<Vec<Process>, ProcessError> {
    specs.iter().map(Process::from_spec).collect()
}

/// Library used when a configuration lists no processes: unit-specific
/// temperature conversions above a generic pass-through.
pub fn default_library() -> Vec<ProcessSpec> {
    let med = crate::rdf::vocab::MED;
    let unit = |u: &str| format!("ASK {{ ?s <{med}unitOfMeasure> \"{u}\" }}");
    vec![
        ProcessSpec {
            process_id: "celsius-to-kelvin".into(),
            match_query: unit("celsius"),
            conversion_id: "celsius_to_kelvin".into(),
            priority: 10,
        },
        ProcessSpec {
            process_id: "fahrenheit-to-celsius".into(),
            match_query: unit("fahrenheit"),
            conversion_id: "fahrenheit_to_celsius".into(),
            priority: 10,
        },
        ProcessSpec {
            process_id: "passthrough".into(),
            match_query: format!("ASK {{ ?s <{med}attributeName> ?n }}"),
            conversion_id: "identity".into(),
            priority: 0,
        },
    ]
}

/// The matching process with the highest priority; ties go to the smallest
/// process id.
pub fn select_process<'a>(descriptor: &Graph, library: &'a [Process]) -> Option<&'a Process> {
    library
        .iter()
        .filter(|p| p.matches(descriptor))
        .min_by(|a, b| b.priority.cmp(&a.priority).then_with(|| a.id.cmp(&b.id)))
}
