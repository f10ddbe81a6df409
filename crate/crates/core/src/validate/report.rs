use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Syntactic,
    Semantic,
    Logical,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Syntactic => "syntactic",
            Category::Semantic => "semantic",
            Category::Logical => "logical",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    pub category: Category,
    pub location: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(category: Category, location: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError {
            category,
            location: location.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub duration_millis: u64,
    pub passed: bool,
    pub errors: Vec<ValidationError>,
}

impl ValidationReport {
    /// Runs `check` and wraps its findings with the elapsed time.
    pub fn timed(check: impl FnOnce() -> Vec<ValidationError>) -> Self {
        let start = Instant::now();
        let errors = check();
        let duration_millis = start.elapsed().as_millis() as u64;
        ValidationReport {
            duration_millis,
            passed: errors.is_empty(),
            errors,
        }
    }

    pub fn count(&self, category: Category) -> usize {
        self.errors.iter().filter(|e| e.category == category).count()
    }
}
