//! Line-oriented N-Triples reader and writer.
//!
//! Supported subset: `<iri>`, `_:label`, and quoted literals with an optional
//! `^^<datatype>` or `@lang` suffix. Literal escapes are limited to `\"`,
//! `\\`, `\n` and `\t`.

use std::fmt;
use std::iter::Peekable;
use std::str::CharIndices;

use thiserror::Error;

use super::graph::{Graph, Triple};
use super::term::{is_blank_label, Literal, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Parses a whole document. Any malformed line fails the entire parse.
pub fn parse_ntriples(text: &str) -> Result<Graph, SyntaxError> {
    let mut graph = Graph::new();
    for (idx, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if let Some(triple) = parse_line(line, idx + 1)? {
            graph.insert(triple);
        }
    }
    Ok(graph)
}

/// One triple per line, sorted by the canonical line text.
pub fn serialize_ntriples(graph: &Graph) -> String {
    let mut lines: Vec<String> = graph.iter().map(Triple::to_string).collect();
    lines.sort();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses a single term in N-Triples syntax, e.g. `<http://a>` or `"5"^^<...>`.
pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    let mut cursor = Cursor::new(text, 1);
    cursor.skip_ws();
    let term = cursor.term()?;
    cursor.skip_ws();
    if let Some((col, c)) = cursor.peek() {
        return Err(cursor.error_at(col, format!("unexpected {c:?} after term")));
    }
    Ok(term)
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<Triple>, SyntaxError> {
    let mut cursor = Cursor::new(line, line_no);
    cursor.skip_ws();
    match cursor.peek() {
        None | Some((_, '#')) => return Ok(None),
        _ => {}
    }
    let subject_col = cursor.column();
    let subject = cursor.term()?;
    if subject.is_literal() {
        return Err(cursor.error_at(subject_col, "subject must be an IRI or blank node"));
    }
    cursor.skip_ws();
    let predicate_col = cursor.column();
    let predicate = cursor.term()?;
    if predicate.as_iri().is_none() {
        return Err(cursor.error_at(predicate_col, "predicate must be an IRI"));
    }
    cursor.skip_ws();
    let object = cursor.term()?;
    cursor.skip_ws();
    cursor.expect('.')?;
    cursor.skip_ws();
    match cursor.peek() {
        None | Some((_, '#')) => {}
        Some((col, c)) => return Err(cursor.error_at(col, format!("unexpected {c:?} after '.'"))),
    }
    let triple = Triple::new(subject, predicate, object).map_err(|e| cursor.error_at(subject_col, e.to_string()))?;
    Ok(Some(triple))
}

struct Cursor<'a> {
    text: &'a str,
    chars: Peekable<CharIndices<'a>>,
    line: usize,
    // 1-based column of the next character
    col: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Cursor {
            text,
            chars: text.char_indices().peekable(),
            line,
            col: 1,
        }
    }

    fn column(&self) -> usize {
        self.col
    }

    fn peek(&mut self) -> Option<(usize, char)> {
        let col = self.col;
        self.chars.peek().map(|&(_, c)| (col, c))
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        self.col += 1;
        Some(c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.text.len(), |&(i, _)| i)
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, ' ' | '\t'))) {
            self.bump();
        }
    }

    fn error_at(&self, column: usize, message: impl fmt::Display) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column,
            message: message.to_string(),
        }
    }

    fn error(&self, message: impl fmt::Display) -> SyntaxError {
        self.error_at(self.col, message)
    }

    fn expect(&mut self, want: char) -> Result<(), SyntaxError> {
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => Err(self.error_at(self.col - 1, format!("expected {want:?}, found {c:?}"))),
            None => Err(self.error(format!("expected {want:?}, found end of line"))),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.peek() {
            Some((_, '<')) => self.iri().map(Term::Iri),
            Some((_, '_')) => self.blank(),
            Some((_, '"')) => self.literal(),
            Some((col, c)) => Err(self.error_at(col, format!("unexpected {c:?}, expected a term"))),
            None => Err(self.error("unexpected end of line, expected a term")),
        }
    }

    fn iri(&mut self) -> Result<String, SyntaxError> {
        let start_col = self.col;
        self.expect('<')?;
        let start = self.offset();
        loop {
            match self.bump() {
                Some('>') => break,
                Some(_) => {}
                None => return Err(self.error_at(start_col, "unterminated IRI")),
            }
        }
        let end = self.offset() - 1;
        let iri = &self.text[start..end];
        super::term::check_iri(iri).map_err(|e| self.error_at(start_col, e))?;
        Ok(iri.to_string())
    }

    fn blank(&mut self) -> Result<Term, SyntaxError> {
        let start_col = self.col;
        self.expect('_')?;
        self.expect(':')?;
        let start = self.offset();
        while matches!(self.chars.peek(), Some((_, c)) if c.is_ascii_alphanumeric()) {
            self.bump();
        }
        let end = self.offset();
        let label = &self.text[start..end];
        if !is_blank_label(label) {
            return Err(self.error_at(start_col, format!("invalid blank node label {label:?}")));
        }
        Ok(Term::Blank(label.to_string()))
    }

    fn literal(&mut self) -> Result<Term, SyntaxError> {
        let start_col = self.col;
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => {
                    let esc_col = self.col - 1;
                    match self.bump() {
                        Some('"') => lexical.push('"'),
                        Some('\\') => lexical.push('\\'),
                        Some('n') => lexical.push('\n'),
                        Some('t') => lexical.push('\t'),
                        Some(c) => return Err(self.error_at(esc_col, format!("unsupported escape \\{c}"))),
                        None => return Err(self.error_at(start_col, "unterminated literal")),
                    }
                }
                Some(c) => lexical.push(c),
                None => return Err(self.error_at(start_col, "unterminated literal")),
            }
        }
        match self.peek() {
            Some((_, '^')) => {
                self.bump();
                self.expect('^')?;
                let dt_col = self.col;
                let datatype = self.iri()?;
                Literal::typed(lexical, datatype)
                    .map(Term::Literal)
                    .map_err(|e| self.error_at(dt_col, e))
            }
            Some((tag_col, '@')) => {
                self.bump();
                let start = self.offset();
                while matches!(self.chars.peek(), Some((_, c)) if c.is_ascii_alphanumeric() || *c == '-') {
                    self.bump();
                }
                let end = self.offset();
                Literal::lang(lexical, &self.text[start..end])
                    .map(Term::Literal)
                    .map_err(|e| self.error_at(tag_col, e))
            }
            _ => Ok(Term::Literal(Literal::string(lexical))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::term::XSD;

    #[test]
    fn single_triple() {
        let g = parse_ntriples("<http://a> <http://b> <http://c> .").unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn empty_input() {
        assert!(parse_ntriples("").unwrap().is_empty());
        assert_eq!(serialize_ntriples(&Graph::new()), "");
    }

    #[test]
    fn typed_literal() {
        let g = parse_ntriples("<http://a> <http://b> \"25\"^^<http://www.w3.org/2001/XMLSchema#integer> .").unwrap();
        let t = g.iter().next().unwrap();
        let lit = t.object().as_literal().unwrap();
        assert_eq!(lit.lexical(), "25");
        assert_eq!(lit.datatype(), format!("{XSD}integer"));
    }

    #[test]
    fn comments_blank_lines_and_duplicates() {
        let text = "# header\n\n<http://a> <http://b> _:x1 . # trailing\n<http://a>  <http://b>\t_:x1 .\n";
        let g = parse_ntriples(text).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn escapes_and_language() {
        let g = parse_ntriples(r#"<http://a> <http://b> "say \"hi\"\n\tback\\slash"@en-GB ."#).unwrap();
        let t = g.iter().next().unwrap();
        let lit = t.object().as_literal().unwrap();
        assert_eq!(lit.lexical(), "say \"hi\"\n\tback\\slash");
        assert_eq!(lit.language(), Some("en-GB"));
        assert_eq!(parse_ntriples(&serialize_ntriples(&g)).unwrap(), g);
    }

    #[test]
    fn one_terminated_line() {
        let g = parse_ntriples("<http://a> <http://b> \"c\" .").unwrap();
        let s = serialize_ntriples(&g);
        assert_eq!(s, "<http://a> <http://b> \"c\" .\n");
    }

    #[test]
    fn errors_report_position() {
        let err = parse_ntriples("<http://a> <http://b> <http://c> .\n<http://a> \"lit\" <http://c> .").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.column, 12);

        let err = parse_ntriples("<http://a> <http://b> <http://c>").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("expected '.'"));

        assert!(parse_ntriples("\"x\" <http://b> <http://c> .").is_err());
        assert!(parse_ntriples("<http://a> <http://b> \"bad \\u0041\" .").is_err());
        assert!(parse_ntriples("<http://a> <http://b> \"open .").is_err());
        assert!(parse_ntriples("<not an iri> <http://b> <http://c> .").is_err());
        assert!(parse_ntriples("<http://a> <http://b> <http://c> . extra").is_err());
    }

    #[test]
    fn atomic_failure() {
        // a good line followed by a bad one yields no graph at all
        let res = parse_ntriples("<http://a> <http://b> <http://c> .\ngarbage");
        assert!(res.is_err());
    }

    #[test]
    fn single_term() {
        assert_eq!(parse_term(" <http://a> ").unwrap(), Term::iri("http://a").unwrap());
        assert!(parse_term("<http://a> x").is_err());
    }

    mod props {
        use proptest::prelude::*;

        use crate::rdf::strategies::any_graph;
        use crate::rdf::{parse_ntriples, serialize_ntriples};

        proptest! {
            #[test]
            fn round_trip(g in any_graph(20)) {
                let text = serialize_ntriples(&g);
                prop_assert_eq!(parse_ntriples(&text).unwrap(), g);
            }

            #[test]
            fn serialization_is_canonical(g in any_graph(20)) {
                let text = serialize_ntriples(&g);
                prop_assert_eq!(serialize_ntriples(&parse_ntriples(&text).unwrap()), text);
            }
        }
    }
}
