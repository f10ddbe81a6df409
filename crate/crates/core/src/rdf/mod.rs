//! RDF terms, triples and graphs, plus the N-Triples carrier format.

mod graph;
mod ntriples;
mod pattern;
mod term;

pub mod vocab;

#[cfg(test)]
pub(crate) mod strategies;

pub use graph::{Graph, Mutation, Triple};
pub use ntriples::{parse_ntriples, parse_term, serialize_ntriples, SyntaxError};
pub use pattern::{match_pattern, BindingSet, PatternTerm, TriplePattern, Variable};
pub use term::{check_iri, Literal, Term, TermError, RDF_LANG_STRING, XSD, XSD_STRING};
