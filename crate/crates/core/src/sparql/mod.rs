//! The query subset used for discovery filters, validation and agent
//! endpoints: `SELECT`/`ASK` over a basic graph pattern with `FILTER`s.

mod ast;
mod decimal;
mod eval;
mod parser;

pub use ast::{CompareOp, FilterExpr, Operand, Projection, Query, QueryForm};
pub use decimal::Decimal;
pub use eval::{evaluate, solve, solve_in_order, QueryResult};
pub use parser::{parse_filter, parse_sparql, parse_triple_pattern, SparqlSyntaxError};
