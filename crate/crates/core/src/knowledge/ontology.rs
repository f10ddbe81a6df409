use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rdf::vocab::*;
use crate::rdf::{Graph, Term, XSD};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructuralError {
    #[error("rdfs:subClassOf endpoint is a literal in {0}")]
    LiteralClass(String),
    #[error("owl:disjointWith endpoint is a literal in {0}")]
    LiteralDisjoint(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDecl {
    pub iri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<String>,
    #[serde(default)]
    pub functional: bool,
}

/// Class hierarchy, property declarations and disjointness axioms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    classes: BTreeSet<String>,
    /// sub → direct superclasses
    parents: BTreeMap<String, BTreeSet<String>>,
    /// sup → direct subclasses
    children: BTreeMap<String, BTreeSet<String>>,
    properties: BTreeMap<String, PropertyDecl>,
    disjoint: BTreeSet<(String, String)>,
}

fn ordered_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// XSD/RDF datatypes accepted as property ranges without a class declaration.
pub fn is_known_datatype(iri: &str) -> bool {
    iri.starts_with(XSD) || iri == RDFS_LITERAL || iri == crate::rdf::RDF_LANG_STRING
}

impl Ontology {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads the recognized RDFS/OWL vocabulary from `graph`; everything
    /// else is ignored. Blank-node class expressions are skipped.
    pub fn load(graph: &Graph) -> Result<Ontology, StructuralError> {
        let mut onto = Ontology::new();
        for t in graph {
            let Term::Iri(subject) = t.subject() else {
                if t.predicate_iri() == RDFS_SUBCLASS_OF && t.object().is_literal() {
                    return Err(StructuralError::LiteralClass(t.to_string()));
                }
                continue;
            };
            match (t.predicate_iri(), t.object()) {
                (RDF_TYPE, Term::Iri(o)) if o == OWL_CLASS || o == RDFS_CLASS => {
                    onto.add_class(subject);
                }
                (RDF_TYPE, Term::Iri(o)) if o == RDF_PROPERTY => {
                    onto.property_entry(subject);
                }
                (RDF_TYPE, Term::Iri(o)) if o == OWL_FUNCTIONAL_PROPERTY => {
                    onto.property_entry(subject).functional = true;
                }
                (RDFS_SUBCLASS_OF, Term::Iri(sup)) => onto.add_subclass(subject, sup),
                (RDFS_SUBCLASS_OF, Term::Literal(_)) => {
                    return Err(StructuralError::LiteralClass(t.to_string()));
                }
                (OWL_DISJOINT_WITH, Term::Iri(other)) => onto.add_disjoint(subject, other),
                (OWL_DISJOINT_WITH, Term::Literal(_)) => {
                    return Err(StructuralError::LiteralDisjoint(t.to_string()));
                }
                (RDFS_DOMAIN, Term::Iri(d)) => {
                    let entry = onto.property_entry(subject);
                    // keep the smallest IRI when several are given, for determinism
                    if entry.domain.as_deref().is_none_or(|cur| d.as_str() < cur) {
                        entry.domain = Some(d.clone());
                    }
                }
                (RDFS_RANGE, Term::Iri(r)) => {
                    let entry = onto.property_entry(subject);
                    if entry.range.as_deref().is_none_or(|cur| r.as_str() < cur) {
                        entry.range = Some(r.clone());
                    }
                }
                _ => {}
            }
        }
        Ok(onto)
    }

    pub fn add_class(&mut self, iri: &str) {
        self.classes.insert(iri.to_string());
    }

    pub fn add_subclass(&mut self, sub: &str, sup: &str) {
        self.add_class(sub);
        self.add_class(sup);
        self.parents.entry(sub.to_string()).or_default().insert(sup.to_string());
        self.children
            .entry(sup.to_string())
            .or_default()
            .insert(sub.to_string());
    }

    pub fn add_disjoint(&mut self, a: &str, b: &str) {
        self.add_class(a);
        self.add_class(b);
        self.disjoint.insert(ordered_pair(a, b));
    }

    pub fn add_property(&mut self, decl: PropertyDecl) {
        self.properties.insert(decl.iri.clone(), decl);
    }

    fn property_entry(&mut self, iri: &str) -> &mut PropertyDecl {
        self.properties.entry(iri.to_string()).or_insert_with(|| PropertyDecl {
            iri: iri.to_string(),
            domain: None,
            range: None,
            functional: false,
        })
    }

    pub fn classes(&self) -> &BTreeSet<String> {
        &self.classes
    }

    pub fn has_class(&self, iri: &str) -> bool {
        self.classes.contains(iri)
    }

    pub fn properties(&self) -> impl Iterator<Item = &PropertyDecl> {
        self.properties.values()
    }

    pub fn subclass_edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parents
            .iter()
            .flat_map(|(sub, sups)| sups.iter().map(move |sup| (sub.as_str(), sup.as_str())))
    }

    pub fn disjoint_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.disjoint.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn are_disjoint(&self, a: &str, b: &str) -> bool {
        self.disjoint.contains(&ordered_pair(a, b))
    }

    pub fn direct_superclasses(&self, class: &str) -> impl Iterator<Item = &str> {
        self.parents.get(class).into_iter().flatten().map(String::as_str)
    }

    /// Reflexive-transitive subclass test.
    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        sub == sup || self.superclasses_of(sub).contains(sup)
    }

    /// All classes reachable upwards from `class`, including itself.
    pub fn superclasses_of(&self, class: &str) -> BTreeSet<String> {
        reach(class, &self.parents)
    }

    /// All classes with `class` as an ancestor, including itself.
    pub fn subclasses_of(&self, class: &str) -> BTreeSet<String> {
        reach(class, &self.children)
    }

    pub fn lookup_property(&self, iri: &str) -> Option<&PropertyDecl> {
        self.properties.get(iri)
    }

    /// Union of two ontologies; used to validate a candidate against a reference.
    pub fn merged(&self, other: &Ontology) -> Ontology {
        let mut out = self.clone();
        for c in &other.classes {
            out.add_class(c);
        }
        for (sub, sup) in other.subclass_edges() {
            out.add_subclass(sub, sup);
        }
        for (a, b) in other.disjoint_pairs() {
            out.add_disjoint(a, b);
        }
        for p in other.properties() {
            out.properties.entry(p.iri.clone()).or_insert_with(|| p.clone());
        }
        out
    }
}

fn reach(start: &str, edges: &BTreeMap<String, BTreeSet<String>>) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([start.to_string()]);
    let mut queue = VecDeque::from([start.to_string()]);
    while let Some(c) = queue.pop_front() {
        for next in edges.get(&c).into_iter().flatten() {
            if seen.insert(next.clone()) {
                queue.push_back(next.clone());
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_ntriples;

    const ONT: &str = "http://wise-iot.example/ontology#";

    fn meeting_room() -> Graph {
        parse_ntriples(&format!(
            "<{ONT}MeetingRoom> <{RDFS_SUBCLASS_OF}> <{ONT}Room> .\n\
             <{ONT}MeetingRoom> <{RDF_TYPE}> <{OWL_CLASS}> .\n\
             <{ONT}Room> <{RDF_TYPE}> <{OWL_CLASS}> .\n"
        ))
        .unwrap()
    }

    #[test]
    fn load_meeting_room_hierarchy() {
        let o = Ontology::load(&meeting_room()).unwrap();
        assert_eq!(o.classes().len(), 2);
        assert_eq!(o.subclass_edges().count(), 1);
        assert!(o.is_subclass(&format!("{ONT}MeetingRoom"), &format!("{ONT}Room")));
        assert!(!o.is_subclass(&format!("{ONT}Room"), &format!("{ONT}MeetingRoom")));
        assert_eq!(
            o.subclasses_of(&format!("{ONT}Room")),
            BTreeSet::from([format!("{ONT}MeetingRoom"), format!("{ONT}Room")])
        );
    }

    #[test]
    fn empty_and_reflexive() {
        let o = Ontology::load(&Graph::new()).unwrap();
        assert_eq!(o, Ontology::new());
        assert!(o.is_subclass("http://x/X", "http://x/X"));
        assert!(!o.is_subclass("http://x/X", "http://x/Y"));
        assert_eq!(
            o.subclasses_of("http://x/U"),
            BTreeSet::from(["http://x/U".to_string()])
        );
    }

    #[test]
    fn chain() {
        let mut o = Ontology::new();
        o.add_subclass("http://x/A", "http://x/B");
        o.add_subclass("http://x/B", "http://x/C");
        assert_eq!(o.subclasses_of("http://x/C").len(), 3);
        assert!(o.is_subclass("http://x/A", "http://x/C"));
    }

    #[test]
    fn datatype_range_and_functional() {
        let g = parse_ntriples(&format!(
            "<http://x/temp> <{RDFS_RANGE}> <{XSD}decimal> .\n\
             <http://x/temp> <{RDF_TYPE}> <{OWL_FUNCTIONAL_PROPERTY}> .\n\
             <http://x/temp> <{RDF_TYPE}> <{RDF_PROPERTY}> .\n\
             <http://x/temp> <{RDF_TYPE}> <{RDF_PROPERTY}> .\n"
        ))
        .unwrap();
        let o = Ontology::load(&g).unwrap();
        let p = o.lookup_property("http://x/temp").unwrap();
        assert_eq!(p.range.as_deref(), Some(format!("{XSD}decimal").as_str()));
        assert!(p.functional);
        assert_eq!(o.properties().count(), 1);
        assert!(o.lookup_property("http://x/other").is_none());
    }

    #[test]
    fn literal_subclass_endpoint_rejected() {
        let g = parse_ntriples(&format!("<http://x/A> <{RDFS_SUBCLASS_OF}> \"B\" .")).unwrap();
        assert!(matches!(Ontology::load(&g), Err(StructuralError::LiteralClass(_))));
    }

    #[test]
    fn idempotent_load() {
        let g = meeting_room();
        assert_eq!(Ontology::load(&g).unwrap(), Ontology::load(&g).unwrap());
    }

    #[test]
    fn cycles_terminate() {
        let mut o = Ontology::new();
        o.add_subclass("http://x/A", "http://x/B");
        o.add_subclass("http://x/B", "http://x/A");
        assert!(o.is_subclass("http://x/A", "http://x/B"));
        assert_eq!(o.subclasses_of("http://x/A").len(), 2);
    }

    #[allow(clippy::needless_range_loop)]
    mod props {
        use proptest::prelude::*;

        use super::super::*;

        fn class(i: usize) -> String {
            format!("http://ex.org/C{i}")
        }

        fn dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
            (1..12usize).prop_flat_map(|n| {
                let edges = prop::collection::vec((0..n, 0..n), 0..(n * 2))
                    .prop_map(|es| es.into_iter().filter(|(a, b)| a > b).collect::<Vec<_>>());
                (Just(n), edges)
            })
        }

        proptest! {
            #[test]
            fn subsumption_matches_reachability((n, edges) in dag()) {
                let mut o = Ontology::new();
                for i in 0..n {
                    o.add_class(&class(i));
                }
                for (a, b) in &edges {
                    o.add_subclass(&class(*a), &class(*b));
                }
                // reachability by repeated relaxation
                let mut reach = vec![vec![false; n]; n];
                for (i, row) in reach.iter_mut().enumerate() {
                    row[i] = true;
                }
                let mut changed = true;
                while changed {
                    changed = false;
                    for &(a, b) in &edges {
                        for j in 0..n {
                            if reach[b][j] && !reach[a][j] {
                                reach[a][j] = true;
                                changed = true;
                            }
                        }
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        prop_assert_eq!(o.is_subclass(&class(i), &class(j)), reach[i][j], "C{} <= C{}", i, j);
                    }
                    let supers = o.superclasses_of(&class(i));
                    prop_assert_eq!(supers.len(), reach[i].iter().filter(|r| **r).count());
                }
            }
        }
    }
}
