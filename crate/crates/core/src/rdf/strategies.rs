//! proptest strategies over a small vocabulary so patterns and rules hit.

use proptest::prelude::*;

use super::{Graph, Literal, Term, Triple};

pub const EX: &str = "http://ex.org/";

pub fn node() -> impl Strategy<Value = Term> {
    (0..6u8).prop_map(|i| Term::iri(format!("{EX}n{i}")).unwrap())
}

pub fn predicate() -> impl Strategy<Value = Term> {
    (0..3u8).prop_map(|i| Term::iri(format!("{EX}p{i}")).unwrap())
}

pub fn object() -> impl Strategy<Value = Term> {
    prop_oneof![
        3 => node(),
        1 => (-5..15i32).prop_map(|n| Term::literal(n.to_string())),
        1 => prop::sample::select(vec!["a", "b", "2.50", ""]).prop_map(Term::literal),
    ]
}

pub fn triple() -> impl Strategy<Value = Triple> {
    (node(), predicate(), object()).prop_map(|(s, p, o)| Triple::new(s, p, o).unwrap())
}

pub fn graph(max: usize) -> impl Strategy<Value = Graph> {
    prop::collection::vec(triple(), 0..=max).prop_map(|ts| ts.into_iter().collect())
}

/// Terms with awkward lexical forms for serializer checks.
pub fn any_term(position: u8) -> BoxedStrategy<Term> {
    let iri = "[a-z]{1,6}(/[A-Za-z0-9_.~-]{0,5}){0,2}(#[a-z0-9]{0,4})?"
        .prop_map(|p| Term::iri(format!("http://{p}")).unwrap());
    let text = "[a-zA-Z0-9 \"\\\\\n\t\u{e9}\u{65e5}\u{1F642}<>#^_:.-]{0,12}";
    match position {
        0 => prop_oneof![
            iri.clone(),
            "[a-zA-Z][a-zA-Z0-9]{0,5}".prop_map(|b| Term::blank(b).unwrap())
        ]
        .boxed(),
        1 => iri.boxed(),
        _ => prop_oneof![
            iri,
            "[a-zA-Z][a-zA-Z0-9]{0,5}".prop_map(|b| Term::blank(b).unwrap()),
            text.prop_map(Term::literal),
            (text, "[a-z]{2}(-[A-Z]{2})?").prop_map(|(l, t)| Term::Literal(Literal::lang(l, t).unwrap())),
            (-1000..1000i64).prop_map(|n| Term::typed_literal(
                n.to_string(),
                "http://www.w3.org/2001/XMLSchema#integer"
            )
            .unwrap()),
        ]
        .boxed(),
    }
}

pub fn any_graph(max: usize) -> impl Strategy<Value = Graph> {
    prop::collection::vec(
        (any_term(0), any_term(1), any_term(2)).prop_map(|(s, p, o)| Triple::new(s, p, o).unwrap()),
        0..=max,
    )
    .prop_map(|ts| ts.into_iter().collect())
}
