//! Generators and independent oracles shared by the integration targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;
use std::sync::Arc;

use axum::extract::State;
use axum::routing::post;
use axum::{Json, Router};
use giots::http::{self, ServiceHandle};
use giots::rdf::{Graph, Literal, Term, Triple};
use parking_lot::Mutex;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use rust_decimal::Decimal;
use serde_json::{json, Value};

pub const EX: &str = "http://ex.org/";
const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";

pub fn iri(local: &str) -> Term {
    Term::iri(format!("{EX}{local}")).unwrap()
}

// ---- graphs for query checks: a small universe so patterns collide ----

pub fn small_object(rng: &mut StdRng) -> Term {
    match rng.gen_range(0..10) {
        0..=3 => iri(&format!("s{}", rng.gen_range(0..5))),
        4 => Term::literal(["3", "-2.5", "10.0", "0", "7"][rng.gen_range(0..5)]),
        5 => Term::literal(["a", "b", "true", ""][rng.gen_range(0..4)]),
        6 => Term::typed_literal("7", XSD_INTEGER).unwrap(),
        7 => Term::Literal(Literal::lang("a", "en").unwrap()),
        _ => Term::literal(format!("{}", rng.gen_range(-3..12))),
    }
}

pub fn small_graph(rng: &mut StdRng, max: usize) -> Graph {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| {
            Triple::new(
                iri(&format!("s{}", rng.gen_range(0..5))),
                iri(&format!("p{}", rng.gen_range(0..3))),
                small_object(rng),
            )
            .unwrap()
        })
        .collect()
}

// ---- graphs for round trips: awkward lexical forms ----

fn awkward_string(rng: &mut StdRng) -> String {
    const PIECES: [&str; 14] = [
        "a", "Z", " ", "\"", "\\", "\n", "\t", "é", "日本", "🙂", "<>", "#", "_:x", "^^",
    ];
    let n = rng.gen_range(0..8);
    (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

pub fn arbitrary_term(rng: &mut StdRng, position: usize) -> Term {
    let kind = match position {
        0 => rng.gen_range(0..2),
        1 => 0,
        _ => rng.gen_range(0..5),
    };
    match kind {
        0 => Term::iri(format!("{EX}r{}#{}", rng.gen_range(0..20), rng.gen_range(0..3))).unwrap(),
        1 => Term::blank(format!("b{}", rng.gen_range(0..10))).unwrap(),
        2 => Term::literal(awkward_string(rng)),
        3 => Term::Literal(Literal::lang(awkward_string(rng), ["en", "de-CH", "fr"][rng.gen_range(0..3)]).unwrap()),
        _ => Term::typed_literal(format!("{}", rng.gen_range(-50..50)), XSD_INTEGER).unwrap(),
    }
}

pub fn arbitrary_graph(rng: &mut StdRng, max: usize) -> Graph {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| Triple::new(arbitrary_term(rng, 0), arbitrary_term(rng, 1), arbitrary_term(rng, 2)).unwrap())
        .collect()
}

// ---- query model with its own text rendering and brute-force evaluation ----

#[derive(Debug, Clone)]
pub enum QTerm {
    Var(usize),
    Const(Term),
}

#[derive(Debug, Clone, Copy)]
pub enum QOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone)]
pub enum QFilter {
    Cmp(QOp, QTerm, QTerm),
    Not(Box<QFilter>),
    And(Box<QFilter>, Box<QFilter>),
    Or(Box<QFilter>, Box<QFilter>),
}

#[derive(Debug, Clone)]
pub struct QQuery {
    pub ask: bool,
    /// None selects every variable.
    pub projection: Option<Vec<usize>>,
    pub patterns: Vec<[QTerm; 3]>,
    pub filters: Vec<QFilter>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Boolean(bool),
    Rows(BTreeSet<BTreeMap<String, Term>>),
}

const VARS: [&str; 4] = ["a", "b", "c", "d"];

fn render_term(t: &QTerm) -> String {
    match t {
        QTerm::Var(i) => format!("?{}", VARS[*i]),
        QTerm::Const(c) => c.to_string(),
    }
}

fn render_filter(f: &QFilter) -> String {
    match f {
        QFilter::Cmp(op, l, r) => {
            let op = match op {
                QOp::Eq => "=",
                QOp::Ne => "!=",
                QOp::Lt => "<",
                QOp::Le => "<=",
                QOp::Gt => ">",
                QOp::Ge => ">=",
            };
            format!("({} {op} {})", render_term(l), render_term(r))
        }
        QFilter::Not(a) => format!("!({})", render_filter(a)),
        QFilter::And(a, b) => format!("({} && {})", render_filter(a), render_filter(b)),
        QFilter::Or(a, b) => format!("({} || {})", render_filter(a), render_filter(b)),
    }
}

impl QQuery {
    pub fn vars(&self) -> BTreeSet<usize> {
        self.patterns
            .iter()
            .flatten()
            .filter_map(|t| match t {
                QTerm::Var(i) => Some(*i),
                QTerm::Const(_) => None,
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let head = if self.ask {
            "ASK".to_string()
        } else {
            match &self.projection {
                None => "SELECT *".to_string(),
                Some(vs) => format!(
                    "SELECT {}",
                    vs.iter()
                        .map(|i| format!("?{}", VARS[*i]))
                        .collect::<Vec<_>>()
                        .join(" ")
                ),
            }
        };
        let mut body: Vec<String> = self
            .patterns
            .iter()
            .map(|p| format!("{} {} {} .", render_term(&p[0]), render_term(&p[1]), render_term(&p[2])))
            .collect();
        body.extend(self.filters.iter().map(|f| format!("FILTER ({})", render_filter(f))));
        format!("{head} WHERE {{ {} }}", body.join(" "))
    }
}

fn pattern_term(rng: &mut StdRng, position: usize) -> QTerm {
    let var_odds = if position == 1 { 0.25 } else { 0.6 };
    if rng.gen_bool(var_odds) {
        QTerm::Var(rng.gen_range(0..VARS.len()))
    } else {
        match position {
            0 => QTerm::Const(iri(&format!("s{}", rng.gen_range(0..5)))),
            1 => QTerm::Const(iri(&format!("p{}", rng.gen_range(0..3)))),
            _ => QTerm::Const(small_object(rng)),
        }
    }
}

fn filter_operand(rng: &mut StdRng, vars: &[usize]) -> QTerm {
    if rng.gen_bool(0.6) {
        QTerm::Var(*vars.choose(rng).unwrap())
    } else {
        QTerm::Const(small_object(rng))
    }
}

fn random_filter(rng: &mut StdRng, vars: &[usize], depth: u32) -> QFilter {
    let ops = [QOp::Eq, QOp::Ne, QOp::Lt, QOp::Le, QOp::Gt, QOp::Ge];
    match if depth == 0 { 0 } else { rng.gen_range(0..6) } {
        3 => QFilter::Not(Box::new(random_filter(rng, vars, depth - 1))),
        4 => QFilter::And(
            Box::new(random_filter(rng, vars, depth - 1)),
            Box::new(random_filter(rng, vars, depth - 1)),
        ),
        5 => QFilter::Or(
            Box::new(random_filter(rng, vars, depth - 1)),
            Box::new(random_filter(rng, vars, depth - 1)),
        ),
        _ => QFilter::Cmp(
            *ops.choose(rng).unwrap(),
            QTerm::Var(*vars.choose(rng).unwrap()),
            filter_operand(rng, vars),
        ),
    }
}

/// Up to three patterns and two filters over the small universe.
pub fn random_query(rng: &mut StdRng) -> QQuery {
    let n = rng.gen_range(1..=3);
    let mut patterns: Vec<[QTerm; 3]> = (0..n)
        .map(|_| [pattern_term(rng, 0), pattern_term(rng, 1), pattern_term(rng, 2)])
        .collect();
    let mut q = QQuery {
        ask: false,
        projection: None,
        patterns: Vec::new(),
        filters: Vec::new(),
    };
    q.patterns = std::mem::take(&mut patterns);
    let vars: Vec<usize> = q.vars().into_iter().collect();
    if vars.is_empty() {
        // a query needs at least one variable to project or filter
        q.patterns[0][0] = QTerm::Var(0);
    }
    let vars: Vec<usize> = q.vars().into_iter().collect();
    q.filters = (0..rng.gen_range(0..=2))
        .map(|_| random_filter(rng, &vars, 2))
        .collect();
    match rng.gen_range(0..4) {
        0 => q.ask = true,
        1 => {
            let mut pick: Vec<usize> = vars.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            if pick.is_empty() {
                pick.push(vars[0]);
            }
            q.projection = Some(pick);
        }
        _ => {}
    }
    q
}

fn numeric_value(t: &Term) -> Option<Decimal> {
    let lex = t.as_literal()?.lexical();
    static RE: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    let re = RE.get_or_init(|| regex::Regex::new(r"^[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)$").unwrap());
    if !re.is_match(lex) {
        return None;
    }
    Decimal::from_str(lex.trim_end_matches('.')).ok()
}

fn oracle_filter(f: &QFilter, row: &[Option<Term>]) -> Option<bool> {
    let resolve = |t: &QTerm| match t {
        QTerm::Var(i) => row[*i].clone(),
        QTerm::Const(c) => Some(c.clone()),
    };
    match f {
        QFilter::Cmp(op, l, r) => {
            let (l, r) = (resolve(l)?, resolve(r)?);
            match (numeric_value(&l), numeric_value(&r)) {
                (Some(a), Some(b)) => Some(match op {
                    QOp::Eq => a == b,
                    QOp::Ne => a != b,
                    QOp::Lt => a < b,
                    QOp::Le => a <= b,
                    QOp::Gt => a > b,
                    QOp::Ge => a >= b,
                }),
                _ => match op {
                    QOp::Eq => Some(l == r),
                    QOp::Ne => Some(l != r),
                    _ => None,
                },
            }
        }
        QFilter::Not(a) => oracle_filter(a, row).map(|b| !b),
        QFilter::And(a, b) => match (oracle_filter(a, row), oracle_filter(b, row)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        QFilter::Or(a, b) => match (oracle_filter(a, row), oracle_filter(b, row)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
    }
}

/// Naive nested loops over the whole graph in textual pattern order, with
/// filters checked on complete rows only.
pub fn brute_force(q: &QQuery, g: &Graph) -> Answer {
    fn walk(
        q: &QQuery,
        triples: &[&Triple],
        depth: usize,
        row: &mut Vec<Option<Term>>,
        rows: &mut BTreeSet<BTreeMap<String, Term>>,
    ) {
        if depth == q.patterns.len() {
            if !q.filters.iter().all(|f| oracle_filter(f, row) == Some(true)) {
                return;
            }
            let keep: Vec<usize> = match &q.projection {
                Some(vs) => vs.clone(),
                None => q.vars().into_iter().collect(),
            };
            rows.insert(
                keep.into_iter()
                    .filter_map(|i| row[i].clone().map(|t| (VARS[i].to_string(), t)))
                    .collect(),
            );
            return;
        }
        for t in triples {
            let saved = row.clone();
            let ok = q.patterns[depth].iter().zip(t.terms()).all(|(pt, term)| match pt {
                QTerm::Const(c) => c == term,
                QTerm::Var(i) => match &row[*i] {
                    Some(bound) => bound == term,
                    None => {
                        row[*i] = Some(term.clone());
                        true
                    }
                },
            });
            if ok {
                walk(q, triples, depth + 1, row, rows);
            }
            *row = saved;
        }
    }
    let triples: Vec<&Triple> = g.iter().collect();
    let mut rows = BTreeSet::new();
    walk(q, &triples, 0, &mut vec![None; VARS.len()], &mut rows);
    if q.ask {
        Answer::Boolean(!rows.is_empty())
    } else {
        Answer::Rows(rows)
    }
}

pub fn answer_of(result: &giots::sparql::QueryResult) -> Answer {
    match result {
        giots::sparql::QueryResult::Boolean(b) => Answer::Boolean(*b),
        giots::sparql::QueryResult::Solutions(rows) => Answer::Rows(rows.iter().cloned().collect()),
    }
}

// ---- class DAGs and the reachability-matrix oracle ----

/// Edges (sub, sup) with sub > sup so the graph is acyclic.
pub fn random_dag(rng: &mut StdRng, max_classes: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.gen_range(1..=max_classes);
    let density = rng.gen_range(0.05..0.4);
    let mut edges = Vec::new();
    for sub in 1..n {
        for sup in 0..sub {
            if rng.gen_bool(density) {
                edges.push((sub, sup));
            }
        }
    }
    edges.shuffle(rng);
    (n, edges)
}

/// Reflexive-transitive closure by Warshall's algorithm.
#[allow(clippy::needless_range_loop)]
pub fn reachability(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        m[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    m
}

pub fn class_iri(i: usize) -> String {
    format!("{EX}C{i}")
}

// ---- HTTP capture endpoint ----

/// Records every JSON body posted to `/notify` (or any path under it).
pub struct Capture {
    pub handle: ServiceHandle,
    pub bodies: Arc<Mutex<Vec<Value>>>,
}

impl Capture {
    pub async fn start() -> Capture {
        let bodies: Arc<Mutex<Vec<Value>>> = Arc::default();
        async fn record(State(b): State<Arc<Mutex<Vec<Value>>>>, Json(v): Json<Value>) -> Json<Value> {
            b.lock().push(v);
            Json(json!({}))
        }
        let router = Router::new()
            .route("/notify", post(record))
            .route("/ngsi10/queryContext", post(record))
            .with_state(bodies.clone());
        let listener = http::bind(0).await.unwrap();
        Capture {
            handle: http::spawn("capture", listener, router).unwrap(),
            bodies,
        }
    }

    pub fn url(&self) -> String {
        self.handle.url()
    }

    pub fn notify_url(&self) -> String {
        format!("{}/notify", self.handle.url())
    }

    pub fn count(&self) -> usize {
        self.bodies.lock().len()
    }

    pub fn take(&self) -> Vec<Value> {
        self.bodies.lock().clone()
    }
}

/// Polls until `check` holds or the deadline passes.
pub async fn eventually<F: FnMut() -> bool>(millis: u64, mut check: F) -> bool {
    let deadline = std::time::Instant::now() + std::time::Duration::from_millis(millis);
    loop {
        if check() {
            return true;
        }
        if std::time::Instant::now() >= deadline {
            return false;
        }
        tokio::time::sleep(std::time::Duration::from_millis(20)).await;
    }
}

/// Path of a file under the repository's `fixtures/` directory.
pub fn fixture(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}
