//! Recursive-descent parser for the query subset (grammar in `docs/sparql-subset.ebnf`).

use std::collections::HashMap;

use thiserror::Error;

use crate::rdf::{check_iri, vocab, Literal, PatternTerm, Term, TriplePattern, Variable, XSD};

use super::ast::{CompareOp, FilterExpr, Operand, Projection, Query, QueryForm};

/// `position` is the 0-based character offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at position {position}: {message}")]
pub struct SparqlSyntaxError {
    pub position: usize,
    pub message: String,
}

pub fn parse_sparql(text: &str) -> Result<Query, SparqlSyntaxError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        prefixes: HashMap::new(),
        end: text.chars().count(),
    };
    parser.query()
}

/// Parses a standalone filter expression such as `?n > 0`, with optional
/// prefix declarations in scope.
pub fn parse_filter(text: &str, prefixes: &[(String, String)]) -> Result<FilterExpr, SparqlSyntaxError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        prefixes: prefixes.iter().cloned().collect(),
        end: text.chars().count(),
    };
    let expr = parser.expr()?;
    parser.finish()?;
    Ok(expr)
}

/// Parses one triple pattern written as `subject predicate object` (an
/// optional trailing `.` is accepted).
pub fn parse_triple_pattern(text: &str, prefixes: &[(String, String)]) -> Result<TriplePattern, SparqlSyntaxError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        prefixes: prefixes.iter().cloned().collect(),
        end: text.chars().count(),
    };
    let subject = parser.subject()?;
    let predicate = parser.verb()?;
    let object = parser.object()?;
    parser.eat(&Tok::Dot);
    parser.finish()?;
    Ok(TriplePattern::new(subject, predicate, object))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Var(String),
    Iri(String),
    PName(String, String),
    Str(String),
    Number(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Semi,
    Comma,
    Star,
    Bang,
    AndAnd,
    OrOr,
    Op(CompareOp),
    Hat2,
    LangTag(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Var(v) => format!("?{v}"),
            Tok::Iri(i) => format!("<{i}>"),
            Tok::PName(p, l) => format!("{p}:{l}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Number(n) => n.clone(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Semi => "';'".into(),
            Tok::Comma => "','".into(),
            Tok::Star => "'*'".into(),
            Tok::Bang => "'!'".into(),
            Tok::AndAnd => "'&&'".into(),
            Tok::OrOr => "'||'".into(),
            Tok::Op(op) => format!("'{op}'"),
            Tok::Hat2 => "'^^'".into(),
            Tok::LangTag(t) => format!("@{t}"),
        }
    }
}

fn err(position: usize, message: impl Into<String>) -> SparqlSyntaxError {
    SparqlSyntaxError {
        position,
        message: message.into(),
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SparqlSyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = match c {
            '{' => {
                i += 1;
                Tok::LBrace
            }
            '}' => {
                i += 1;
                Tok::RBrace
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ';' => {
                i += 1;
                Tok::Semi
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '.' if !chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()) => {
                i += 1;
                Tok::Dot
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                i += 2;
                Tok::Op(CompareOp::Ne)
            }
            '!' => {
                i += 1;
                Tok::Bang
            }
            '=' => {
                i += 1;
                Tok::Op(CompareOp::Eq)
            }
            '&' if chars.get(i + 1) == Some(&'&') => {
                i += 2;
                Tok::AndAnd
            }
            '|' if chars.get(i + 1) == Some(&'|') => {
                i += 2;
                Tok::OrOr
            }
            '^' if chars.get(i + 1) == Some(&'^') => {
                i += 2;
                Tok::Hat2
            }
            '>' if chars.get(i + 1) == Some(&'=') => {
                i += 2;
                Tok::Op(CompareOp::Ge)
            }
            '>' => {
                i += 1;
                Tok::Op(CompareOp::Gt)
            }
            '<' => {
                // IRIREF when a closing '>' follows with no forbidden characters
                let mut j = i + 1;
                while j < chars.len()
                    && chars[j] != '>'
                    && !chars[j].is_whitespace()
                    && !matches!(chars[j], '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
                {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '>' && j > i + 1 {
                    let iri: String = chars[i + 1..j].iter().collect();
                    i = j + 1;
                    Tok::Iri(iri)
                } else if chars.get(i + 1) == Some(&'=') {
                    i += 2;
                    Tok::Op(CompareOp::Le)
                } else {
                    i += 1;
                    Tok::Op(CompareOp::Lt)
                }
            }
            '?' | '$' => {
                i += 1;
                let s = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[s..i].iter().collect();
                if Variable::new(name.clone()).is_none() {
                    return Err(err(start, format!("invalid variable name {c}{name}")));
                }
                Tok::Var(name)
            }
            '"' | '\'' => {
                let quote = c;
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(err(start, "unterminated string literal")),
                        Some(&q) if q == quote => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let e = chars.get(i + 1).copied();
                            s.push(match e {
                                Some('"') => '"',
                                Some('\'') => '\'',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                _ => return Err(err(i, "unsupported escape sequence")),
                            });
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            '@' => {
                i += 1;
                let s = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '-') {
                    i += 1;
                }
                if s == i {
                    return Err(err(start, "empty language tag"));
                }
                Tok::LangTag(chars[s..i].iter().collect())
            }
            c if c.is_ascii_digit()
                || c == '.'
                || ((c == '-' || c == '+') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.')) =>
            {
                let s = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if matches!(chars.get(i), Some('e' | 'E')) {
                    let mut j = i + 1;
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                Tok::Number(chars[s..i].iter().collect())
            }
            c if c.is_alphabetic() || c == ':' || c == '_' => {
                let s = i;
                while i < chars.len() && is_name_char(chars[i]) {
                    i += 1;
                }
                let prefix: String = chars[s..i].iter().collect();
                if chars.get(i) == Some(&':') {
                    i += 1;
                    let ls = i;
                    while i < chars.len()
                        && (is_name_char(chars[i])
                            || (chars[i] == '.' && chars.get(i + 1).is_some_and(|c| is_name_char(*c))))
                    {
                        i += 1;
                    }
                    Tok::PName(prefix, chars[ls..i].iter().collect())
                } else if prefix.is_empty() {
                    return Err(err(start, format!("unexpected character {c:?}")));
                } else {
                    Tok::Word(prefix)
                }
            }
            other => return Err(err(start, format!("unexpected character {other:?}"))),
        };
        out.push((tok, start));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    prefixes: HashMap<String, String>,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> SparqlSyntaxError {
        match self.peek() {
            Some(t) => err(self.here(), format!("expected {wanted}, found {}", t.describe())),
            None => err(self.end, format!("expected {wanted}, found end of input")),
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), SparqlSyntaxError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn finish(&self) -> Result<(), SparqlSyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.unexpected("end of input")),
        }
    }

    fn query(&mut self) -> Result<Query, SparqlSyntaxError> {
        while self.eat_keyword("PREFIX") {
            let pos = self.here();
            let prefix = match self.next() {
                Some(Tok::PName(p, l)) if l.is_empty() => p,
                _ => return Err(err(pos, "expected prefix name ending in ':'")),
            };
            let pos = self.here();
            let iri = match self.next() {
                Some(Tok::Iri(iri)) => iri,
                _ => return Err(err(pos, "expected <iri> in PREFIX declaration")),
            };
            check_iri(&iri).map_err(|e| err(pos, e.to_string()))?;
            self.prefixes.insert(prefix, iri);
        }

        let form_pos = self.here();
        let form = if self.eat_keyword("SELECT") {
            self.eat_keyword("DISTINCT");
            if self.eat(&Tok::Star) {
                QueryForm::Select(Projection::All)
            } else {
                let mut vars = Vec::new();
                while let Some(Tok::Var(name)) = self.peek() {
                    vars.push(Variable::new(name.clone()).expect("lexer validates names"));
                    self.pos += 1;
                }
                if vars.is_empty() {
                    return Err(self.unexpected("'*' or a projected variable"));
                }
                QueryForm::Select(Projection::Vars(vars))
            }
        } else if self.eat_keyword("ASK") {
            QueryForm::Ask
        } else {
            return Err(self.unexpected("SELECT or ASK"));
        };

        self.eat_keyword("WHERE");
        let (patterns, filters) = self.group()?;
        self.finish()?;

        if patterns.is_empty() {
            return Err(err(form_pos, "query has an empty basic graph pattern"));
        }
        let query = Query {
            form,
            patterns,
            filters,
        };
        if let QueryForm::Select(Projection::Vars(vars)) = &query.form {
            let in_bgp = query.pattern_vars();
            if let Some(v) = vars.iter().find(|v| !in_bgp.contains(v)) {
                return Err(err(
                    form_pos,
                    format!("projected variable {v} does not occur in the pattern"),
                ));
            }
        }
        Ok(query)
    }

    fn group(&mut self) -> Result<(Vec<TriplePattern>, Vec<FilterExpr>), SparqlSyntaxError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        loop {
            if self.eat(&Tok::RBrace) {
                break;
            }
            if self.peek().is_none() {
                return Err(self.unexpected("'}'"));
            }
            if self.eat_keyword("FILTER") {
                self.expect(Tok::LParen, "'(' after FILTER")?;
                filters.push(self.expr()?);
                self.expect(Tok::RParen, "')'")?;
                self.eat(&Tok::Dot);
                continue;
            }
            self.triples_same_subject(&mut patterns)?;
            if !self.eat(&Tok::Dot) && !matches!(self.peek(), Some(Tok::RBrace)) && !self.peek_keyword("FILTER") {
                return Err(self.unexpected("'.' or '}'"));
            }
        }
        Ok((patterns, filters))
    }

    fn triples_same_subject(&mut self, out: &mut Vec<TriplePattern>) -> Result<(), SparqlSyntaxError> {
        let subject = self.subject()?;
        loop {
            let verb = self.verb()?;
            loop {
                let object = self.object()?;
                out.push(TriplePattern::new(subject.clone(), verb.clone(), object));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            if !self.eat(&Tok::Semi) {
                break;
            }
            // a trailing ';' before '.' or '}' is allowed
            if matches!(self.peek(), Some(Tok::Dot | Tok::RBrace)) {
                break;
            }
        }
        Ok(())
    }

    fn resolve_pname(&self, pos: usize, prefix: &str, local: &str) -> Result<String, SparqlSyntaxError> {
        let base = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| err(pos, format!("undefined prefix '{prefix}:'")))?;
        let iri = format!("{base}{local}");
        check_iri(&iri).map_err(|e| err(pos, e.to_string()))?;
        Ok(iri)
    }

    fn iri_token(&mut self) -> Result<Option<Term>, SparqlSyntaxError> {
        let pos = self.here();
        match self.peek().cloned() {
            Some(Tok::Iri(iri)) => {
                self.pos += 1;
                check_iri(&iri).map_err(|e| err(pos, e.to_string()))?;
                Ok(Some(Term::Iri(iri)))
            }
            Some(Tok::PName(p, l)) => {
                self.pos += 1;
                Ok(Some(Term::Iri(self.resolve_pname(pos, &p, &l)?)))
            }
            _ => Ok(None),
        }
    }

    fn var_token(&mut self) -> Option<Variable> {
        if let Some(Tok::Var(name)) = self.peek() {
            let v = Variable::new(name.clone()).expect("lexer validates names");
            self.pos += 1;
            Some(v)
        } else {
            None
        }
    }

    fn subject(&mut self) -> Result<PatternTerm, SparqlSyntaxError> {
        if let Some(v) = self.var_token() {
            return Ok(PatternTerm::Var(v));
        }
        if let Some(t) = self.iri_token()? {
            return Ok(PatternTerm::Term(t));
        }
        Err(self.unexpected("a variable or IRI in subject position"))
    }

    fn verb(&mut self) -> Result<PatternTerm, SparqlSyntaxError> {
        if let Some(v) = self.var_token() {
            return Ok(PatternTerm::Var(v));
        }
        if self.peek() == Some(&Tok::Word("a".into())) {
            self.pos += 1;
            return Ok(PatternTerm::Term(Term::Iri(vocab::RDF_TYPE.into())));
        }
        if let Some(t) = self.iri_token()? {
            return Ok(PatternTerm::Term(t));
        }
        Err(self.unexpected("a variable or IRI in predicate position"))
    }

    fn object(&mut self) -> Result<PatternTerm, SparqlSyntaxError> {
        if let Some(v) = self.var_token() {
            return Ok(PatternTerm::Var(v));
        }
        match self.constant()? {
            Some(t) => Ok(PatternTerm::Term(t)),
            None => Err(self.unexpected("a variable, IRI or literal in object position")),
        }
    }

    /// IRI, prefixed name, string/numeric/boolean literal.
    fn constant(&mut self) -> Result<Option<Term>, SparqlSyntaxError> {
        if let Some(t) = self.iri_token()? {
            return Ok(Some(t));
        }
        let pos = self.here();
        match self.peek().cloned() {
            Some(Tok::Str(s)) => {
                self.pos += 1;
                if self.eat(&Tok::Hat2) {
                    let dt_pos = self.here();
                    let dt = self
                        .iri_token()?
                        .ok_or_else(|| self.unexpected("datatype IRI after '^^'"))?;
                    let lit =
                        Literal::typed(s, dt.as_iri().expect("iri token")).map_err(|e| err(dt_pos, e.to_string()))?;
                    Ok(Some(Term::Literal(lit)))
                } else if let Some(Tok::LangTag(tag)) = self.peek().cloned() {
                    self.pos += 1;
                    let lit = Literal::lang(s, tag).map_err(|e| err(pos, e.to_string()))?;
                    Ok(Some(Term::Literal(lit)))
                } else {
                    Ok(Some(Term::literal(s)))
                }
            }
            Some(Tok::Number(n)) => {
                self.pos += 1;
                let dt = if n.contains(['e', 'E']) {
                    "double"
                } else if n.contains('.') {
                    "decimal"
                } else {
                    "integer"
                };
                Ok(Some(
                    Term::typed_literal(n, format!("{XSD}{dt}")).expect("xsd datatype is a valid IRI"),
                ))
            }
            Some(Tok::Word(w)) if w == "true" || w == "false" => {
                self.pos += 1;
                Ok(Some(
                    Term::typed_literal(w, format!("{XSD}boolean")).expect("xsd datatype is a valid IRI"),
                ))
            }
            _ => Ok(None),
        }
    }

    fn expr(&mut self) -> Result<FilterExpr, SparqlSyntaxError> {
        let mut left = self.and_expr()?;
        while self.eat(&Tok::OrOr) {
            let right = self.and_expr()?;
            left = FilterExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<FilterExpr, SparqlSyntaxError> {
        let mut left = self.unary()?;
        while self.eat(&Tok::AndAnd) {
            let right = self.unary()?;
            left = FilterExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<FilterExpr, SparqlSyntaxError> {
        if self.eat(&Tok::Bang) {
            return Ok(FilterExpr::Not(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let inner = self.expr()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(inner);
        }
        let left = self.operand()?;
        if let Some(Tok::Op(op)) = self.peek().cloned() {
            self.pos += 1;
            let right = self.operand()?;
            return Ok(FilterExpr::Compare(op, left, right));
        }
        Ok(FilterExpr::Value(left))
    }

    fn operand(&mut self) -> Result<Operand, SparqlSyntaxError> {
        if let Some(v) = self.var_token() {
            return Ok(Operand::Var(v));
        }
        match self.constant()? {
            Some(t) => Ok(Operand::Term(t)),
            None => Err(self.unexpected("a variable or constant in filter expression")),
        }
    }
}
