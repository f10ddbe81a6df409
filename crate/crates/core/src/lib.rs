pub mod cse;
pub mod harness;
pub mod http;
pub mod knowledge;
pub mod kspa;
pub mod ngsi;
pub mod rdf;
pub mod rules;
pub mod smg;
pub mod sparql;
pub mod validate;
