use std::collections::BTreeSet;
use std::fmt;

use crate::rdf::{BindingSet, Term, TriplePattern, Variable};

use super::decimal::Decimal;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    All,
    Vars(Vec<Variable>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryForm {
    Select(Projection),
    Ask,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub form: QueryForm,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
}

impl Query {
    pub fn is_ask(&self) -> bool {
        matches!(self.form, QueryForm::Ask)
    }

    /// Variables occurring in the basic graph pattern.
    pub fn pattern_vars(&self) -> BTreeSet<&Variable> {
        self.patterns.iter().flat_map(TriplePattern::variables).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Var(Variable),
    Term(Term),
}

impl Operand {
    fn resolve<'a>(&'a self, bindings: &'a BindingSet) -> Option<&'a Term> {
        match self {
            Operand::Var(v) => bindings.get(v.name()),
            Operand::Term(t) => Some(t),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => v.fmt(f),
            Operand::Term(t) => t.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterExpr {
    Or(Box<FilterExpr>, Box<FilterExpr>),
    And(Box<FilterExpr>, Box<FilterExpr>),
    Not(Box<FilterExpr>),
    Compare(CompareOp, Operand, Operand),
    Value(Operand),
}

impl FilterExpr {
    /// Filter outcome for one solution; evaluation errors count as false.
    pub fn holds(&self, bindings: &BindingSet) -> bool {
        self.eval(bindings) == Some(true)
    }

    /// Three-valued evaluation: `None` is an evaluation error. Errors
    /// propagate through `!` and are absorbed by `||`/`&&` only when the other
    /// side decides the result.
    pub fn eval(&self, bindings: &BindingSet) -> Option<bool> {
        match self {
            FilterExpr::Or(a, b) => match (a.eval(bindings), b.eval(bindings)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            FilterExpr::And(a, b) => match (a.eval(bindings), b.eval(bindings)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            FilterExpr::Not(a) => a.eval(bindings).map(|v| !v),
            FilterExpr::Compare(op, l, r) => compare(*op, l.resolve(bindings)?, r.resolve(bindings)?),
            FilterExpr::Value(o) => effective_boolean(o.resolve(bindings)?),
        }
    }

    pub fn variables(&self) -> BTreeSet<&Variable> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a Variable>) {
        match self {
            FilterExpr::Or(a, b) | FilterExpr::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            FilterExpr::Not(a) => a.collect_vars(out),
            FilterExpr::Compare(_, l, r) => {
                for o in [l, r] {
                    if let Operand::Var(v) = o {
                        out.insert(v);
                    }
                }
            }
            FilterExpr::Value(Operand::Var(v)) => {
                out.insert(v);
            }
            FilterExpr::Value(_) => {}
        }
    }
}

impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterExpr::Or(a, b) => write!(f, "({a} || {b})"),
            FilterExpr::And(a, b) => write!(f, "({a} && {b})"),
            FilterExpr::Not(a) => write!(f, "!{a}"),
            FilterExpr::Compare(op, l, r) => write!(f, "({l} {op} {r})"),
            FilterExpr::Value(o) => o.fmt(f),
        }
    }
}

fn numeric(term: &Term) -> Option<Decimal> {
    term.as_literal().and_then(|l| Decimal::parse(l.lexical()))
}

fn compare(op: CompareOp, left: &Term, right: &Term) -> Option<bool> {
    if let (Some(l), Some(r)) = (numeric(left), numeric(right)) {
        let ord = l.cmp(&r);
        return Some(match op {
            CompareOp::Eq => ord.is_eq(),
            CompareOp::Ne => ord.is_ne(),
            CompareOp::Lt => ord.is_lt(),
            CompareOp::Le => ord.is_le(),
            CompareOp::Gt => ord.is_gt(),
            CompareOp::Ge => ord.is_ge(),
        });
    }
    match op {
        CompareOp::Eq => Some(left == right),
        CompareOp::Ne => Some(left != right),
        _ => None,
    }
}

fn effective_boolean(term: &Term) -> Option<bool> {
    let lit = term.as_literal()?;
    if let Some(d) = Decimal::parse(lit.lexical()) {
        return Some(d != Decimal::parse("0").expect("zero parses"));
    }
    match lit.lexical() {
        "true" => Some(true),
        "false" => Some(false),
        other => Some(!other.is_empty()),
    }
}
