//! Horn-style rules over triples and a bounded forward-chaining closure.
//!
//! Rules are exchanged as JSON with patterns in a compact string syntax:
//!
//! ```json
//! {"ruleId": "occupied",
//!  "prefixes": {"ctx": "http://wise-iot.example/context#"},
//!  "body": ["?r ctx:occupancy ?n"],
//!  "filters": ["?n > 0"],
//!  "head": ["?r ctx:occupied \"true\""]}
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rdf::{BindingSet, Graph, Triple, TriplePattern, Variable};
use crate::sparql::{parse_filter, parse_triple_pattern, solve, FilterExpr, SparqlSyntaxError};

/// Upper bound on derived triples before a closure is declared runaway.
pub const DERIVATION_BOUND: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleSpec {
    pub rule_id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub prefixes: BTreeMap<String, String>,
    pub body: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters: Vec<String>,
    pub head: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule {rule}: {part} {index}: {source}")]
    Syntax {
        rule: String,
        part: &'static str,
        index: usize,
        source: SparqlSyntaxError,
    },
    #[error("rule {0}: empty body")]
    EmptyBody(String),
    #[error("rule {rule}: head variables {vars:?} do not occur in the body")]
    Unsafe { rule: String, vars: Vec<String> },
    #[error("duplicate rule id {0}")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub body: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
    pub head: Vec<TriplePattern>,
}

impl Rule {
    /// Parses the compact syntax. Safety is checked separately by
    /// [`Rule::check_safe`] so validators can report it distinctly.
    pub fn parse(spec: &RuleSpec) -> Result<Rule, RuleError> {
        let prefixes: Vec<(String, String)> = spec.prefixes.clone().into_iter().collect();
        let syntax = |part, index, source| RuleError::Syntax {
            rule: spec.rule_id.clone(),
            part,
            index,
            source,
        };
        let body = spec
            .body
            .iter()
            .enumerate()
            .map(|(i, s)| parse_triple_pattern(s, &prefixes).map_err(|e| syntax("body pattern", i, e)))
            .collect::<Result<Vec<_>, _>>()?;
        let filters = spec
            .filters
            .iter()
            .enumerate()
            .map(|(i, s)| parse_filter(s, &prefixes).map_err(|e| syntax("filter", i, e)))
            .collect::<Result<Vec<_>, _>>()?;
        let head = spec
            .head
            .iter()
            .enumerate()
            .map(|(i, s)| parse_triple_pattern(s, &prefixes).map_err(|e| syntax("head pattern", i, e)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Rule {
            id: spec.rule_id.clone(),
            body,
            filters,
            head,
        })
    }

    pub fn body_vars(&self) -> BTreeSet<&Variable> {
        self.body.iter().flat_map(TriplePattern::variables).collect()
    }

    /// Every head and filter variable must be bound by the body.
    pub fn check_safe(&self) -> Result<(), RuleError> {
        if self.body.is_empty() {
            return Err(RuleError::EmptyBody(self.id.clone()));
        }
        let bound = self.body_vars();
        let mut unsafe_vars: Vec<String> = self
            .head
            .iter()
            .flat_map(TriplePattern::variables)
            .chain(self.filters.iter().flat_map(FilterExpr::variables))
            .filter(|v| !bound.contains(v))
            .map(|v| v.name().to_string())
            .collect();
        unsafe_vars.sort();
        unsafe_vars.dedup();
        if unsafe_vars.is_empty() {
            Ok(())
        } else {
            Err(RuleError::Unsafe {
                rule: self.id.clone(),
                vars: unsafe_vars,
            })
        }
    }

    /// Head triples produced by one pass of this rule over `graph`.
    pub fn fire(&self, graph: &Graph) -> Vec<(Triple, BindingSet)> {
        let mut out = Vec::new();
        for bindings in solve(&self.body, &self.filters, graph, false) {
            for pattern in &self.head {
                if let Some(t) = pattern.instantiate(&bindings) {
                    out.push((t, bindings.clone()));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleBase {
    rules: Vec<Rule>,
}

impl RuleBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_specs(specs: &[RuleSpec]) -> Result<RuleBase, RuleError> {
        let mut base = RuleBase::new();
        for spec in specs {
            let rule = Rule::parse(spec)?;
            rule.check_safe()?;
            base.add(rule)?;
        }
        Ok(base)
    }

    pub fn add(&mut self, rule: Rule) -> Result<(), RuleError> {
        if self.contains(&rule.id) {
            return Err(RuleError::DuplicateId(rule.id));
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.rules.iter().any(|r| r.id == id)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// One derived triple with the rule and bindings that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub triple: Triple,
    pub rule_id: String,
    pub bindings: BindingSet,
    /// Fixpoint round (1-based) in which the triple first appeared.
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    pub graph: Graph,
    pub derivations: Vec<Derivation>,
}

impl Closure {
    pub fn derived(&self) -> Graph {
        self.derivations.iter().map(|d| d.triple.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("closure exceeded {bound} derived triples")]
pub struct BoundExceeded {
    pub bound: usize,
}

/// Applies `rules` to `facts` round by round until nothing new derives.
pub fn forward_chain<'a>(
    facts: &Graph,
    rules: impl IntoIterator<Item = &'a Rule> + Clone,
    bound: usize,
) -> Result<Closure, BoundExceeded> {
    let mut graph = facts.clone();
    let mut derivations = Vec::new();
    let mut round = 0;
    loop {
        round += 1;
        let mut fresh: BTreeMap<Triple, (String, BindingSet)> = BTreeMap::new();
        for rule in rules.clone() {
            for (triple, bindings) in rule.fire(&graph) {
                if !graph.contains(&triple) {
                    fresh.entry(triple).or_insert_with(|| (rule.id.clone(), bindings));
                }
            }
        }
        if fresh.is_empty() {
            return Ok(Closure { graph, derivations });
        }
        for (triple, (rule_id, bindings)) in fresh {
            graph.insert(triple.clone());
            derivations.push(Derivation {
                triple,
                rule_id,
                bindings,
                round,
            });
            if derivations.len() > bound {
                return Err(BoundExceeded { bound });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{parse_ntriples, Term};

    fn spec(id: &str, body: &[&str], filters: &[&str], head: &[&str]) -> RuleSpec {
        RuleSpec {
            rule_id: id.into(),
            prefixes: BTreeMap::from([("ex".to_string(), "http://ex/".to_string())]),
            body: body.iter().map(|s| s.to_string()).collect(),
            filters: filters.iter().map(|s| s.to_string()).collect(),
            head: head.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn occupancy_rule() {
        let rule = Rule::parse(&spec(
            "occ",
            &["?r ex:occupancy ?n"],
            &["?n > 0"],
            &["?r ex:occupied \"true\""],
        ))
        .unwrap();
        rule.check_safe().unwrap();
        let facts =
            parse_ntriples("<urn:room123> <http://ex/occupancy> \"4\" .\n<urn:room9> <http://ex/occupancy> \"0\" .\n")
                .unwrap();
        let closure = forward_chain(&facts, [&rule], DERIVATION_BOUND).unwrap();
        let derived = closure.derived();
        assert_eq!(derived.len(), 1);
        let t = derived.iter().next().unwrap();
        assert_eq!(t.subject(), &Term::iri("urn:room123").unwrap());
        assert_eq!(t.object(), &Term::literal("true"));
    }

    #[test]
    fn unsafe_head() {
        let rule = Rule::parse(&spec("bad", &["?a ex:p ?b"], &[], &["?a ex:q ?c"])).unwrap();
        assert!(matches!(rule.check_safe(), Err(RuleError::Unsafe { vars, .. }) if vars == vec!["c"]));
        let rule = Rule::parse(&spec("bad2", &["?a ex:p ?b"], &["?z > 1"], &["?a ex:q ?b"])).unwrap();
        assert!(rule.check_safe().is_err());
    }

    #[test]
    fn transitive_closure_reaches_fixpoint() {
        let rule = Rule::parse(&spec("trans", &["?a ex:lt ?b", "?b ex:lt ?c"], &[], &["?a ex:lt ?c"])).unwrap();
        let facts: Graph = (0..6)
            .map(|i| {
                Triple::new(
                    Term::iri(format!("http://ex/n{i}")).unwrap(),
                    Term::iri("http://ex/lt").unwrap(),
                    Term::iri(format!("http://ex/n{}", i + 1)).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let closure = forward_chain(&facts, [&rule], DERIVATION_BOUND).unwrap();
        // 7 nodes in a chain: 21 ordered pairs, 6 given
        assert_eq!(closure.graph.len(), 21);
        assert_eq!(closure.derivations.len(), 15);
    }

    #[test]
    fn bound_is_enforced() {
        let rule = Rule::parse(&spec("all", &["?a ex:e ?b", "?c ex:e ?d"], &[], &["?a ex:r ?d"])).unwrap();
        let facts: Graph = (0..40)
            .map(|i| {
                Triple::new(
                    Term::iri(format!("http://ex/a{i}")).unwrap(),
                    Term::iri("http://ex/e").unwrap(),
                    Term::iri(format!("http://ex/b{i}")).unwrap(),
                )
                .unwrap()
            })
            .collect();
        assert_eq!(forward_chain(&facts, [&rule], 1000), Err(BoundExceeded { bound: 1000 }));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let s = spec("r", &["?a ex:p ?b"], &[], &["?a ex:q ?b"]);
        assert!(matches!(
            RuleBase::from_specs(&[s.clone(), s]),
            Err(RuleError::DuplicateId(_))
        ));
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = Rule::parse(&spec("r", &["?a ex:p"], &[], &["?a ex:q ?b"])).unwrap_err();
        assert!(matches!(
            err,
            RuleError::Syntax {
                part: "body pattern",
                index: 0,
                ..
            }
        ));
    }

    #[test]
    fn json_shape() {
        let json = r#"{"ruleId":"x","body":["?a <http://ex/p> ?b"],"head":["?b <http://ex/q> ?a"]}"#;
        let s: RuleSpec = serde_json::from_str(json).unwrap();
        let r = Rule::parse(&s).unwrap();
        assert_eq!(r.head.len(), 1);
        assert!(r.filters.is_empty());
    }

    mod props {
        use proptest::prelude::*;

        use super::super::*;
        use super::spec;
        use crate::rdf::strategies::{graph, EX};

        fn rules() -> RuleBase {
            let mut specs = vec![
                spec("sym", &["?x ex:p0 ?y"], &[], &["?y ex:p0 ?x"]),
                spec("chain", &["?x ex:p1 ?y", "?y ex:p1 ?z"], &[], &["?x ex:p1 ?z"]),
                spec("mark", &["?x ex:p2 ?n"], &["?n > 3"], &["?x ex:p2 \"big\""]),
            ];
            for s in &mut specs {
                s.prefixes.insert("ex".into(), EX.into());
            }
            RuleBase::from_specs(&specs).unwrap()
        }

        proptest! {
            #[test]
            fn closure_is_monotone(g in graph(15), extra in graph(8)) {
                let rules = rules();
                let small = forward_chain(&g, rules.rules(), DERIVATION_BOUND).unwrap().graph;
                let large = forward_chain(&g.union(&extra), rules.rules(), DERIVATION_BOUND).unwrap().graph;
                prop_assert!(small.iter().all(|t| large.contains(t)));
            }

            #[test]
            fn closure_is_a_fixpoint(g in graph(15)) {
                let rules = rules();
                let once = forward_chain(&g, rules.rules(), DERIVATION_BOUND).unwrap();
                prop_assert!(g.iter().all(|t| once.graph.contains(t)));
                let twice = forward_chain(&once.graph, rules.rules(), DERIVATION_BOUND).unwrap();
                prop_assert_eq!(&twice.graph, &once.graph);
                prop_assert!(twice.derivations.is_empty());
            }
        }
    }
}
