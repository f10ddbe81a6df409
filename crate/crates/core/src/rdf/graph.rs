use std::collections::btree_set;
use std::collections::BTreeSet;
use std::fmt;

use super::term::{Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl Triple {
    /// Subjects may not be literals and predicates must be IRIs.
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, TermError> {
        if subject.is_literal() {
            return Err(TermError::Position("a literal subject"));
        }
        if predicate.as_iri().is_none() {
            return Err(TermError::Position("a non-IRI predicate"));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn predicate_iri(&self) -> &str {
        self.predicate.as_iri().unwrap_or_default()
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    Insert,
    Remove,
}

/// A set of triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    triples: BTreeSet<Triple>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    /// Returns false when the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        self.triples.remove(triple)
    }

    /// Value-style mutation: consumes the snapshot and returns the next one.
    pub fn mutate(mut self, op: Mutation, triple: Triple) -> Graph {
        match op {
            Mutation::Insert => {
                self.insert(triple);
            }
            Mutation::Remove => {
                self.remove(&triple);
            }
        }
        self
    }

    pub fn iter(&self) -> btree_set::Iter<'_, Triple> {
        self.triples.iter()
    }

    /// Triples agreeing with every given position. A known subject narrows
    /// the scan to a range of the ordered set.
    pub fn matching<'a>(
        &'a self,
        subject: Option<&'a Term>,
        predicate: Option<&'a Term>,
        object: Option<&'a Term>,
    ) -> Box<dyn Iterator<Item = &'a Triple> + 'a> {
        let keep =
            move |t: &&Triple| predicate.is_none_or(|p| &t.predicate == p) && object.is_none_or(|o| &t.object == o);
        match subject {
            Some(s) => {
                let floor = Triple {
                    subject: s.clone(),
                    predicate: predicate.cloned().unwrap_or_else(|| Term::Iri(String::new())),
                    object: Term::Iri(String::new()),
                };
                Box::new(
                    self.triples
                        .range(floor..)
                        .take_while(move |t| &t.subject == s && predicate.is_none_or(|p| &t.predicate == p))
                        .filter(keep),
                )
            }
            None => Box::new(self.triples.iter().filter(keep)),
        }
    }

    pub fn union(&self, other: &Graph) -> Graph {
        self.triples.union(&other.triples).cloned().collect()
    }

    /// Triples with the given subject and predicate, in order.
    pub fn objects<'a>(&'a self, subject: &'a Term, predicate: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.iter()
            .filter(move |t| t.subject() == subject && t.predicate_iri() == predicate)
            .map(Triple::object)
    }

    pub fn subjects<'a>(&'a self, predicate: &'a str, object: &'a Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.iter()
            .filter(move |t| t.predicate_iri() == predicate && t.object() == object)
            .map(Triple::subject)
    }

    pub fn with_predicate<'a>(&'a self, predicate: &'a str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.iter().filter(move |t| t.predicate_iri() == predicate)
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Graph {
            triples: iter.into_iter().collect(),
        }
    }
}

impl Extend<Triple> for Graph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        self.triples.extend(iter)
    }
}

impl IntoIterator for Graph {
    type Item = Triple;
    type IntoIter = btree_set::IntoIter<Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.into_iter()
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = btree_set::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}
