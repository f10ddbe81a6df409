use std::fmt;

use thiserror::Error;

pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("invalid IRI {0:?}")]
    InvalidIri(String),
    #[error("invalid blank node label {0:?}")]
    InvalidBlankLabel(String),
    #[error("invalid language tag {0:?}")]
    InvalidLanguageTag(String),
    #[error("{0} is not allowed in this position")]
    Position(&'static str),
}

/// An RDF literal. Plain literals carry the `xsd:string` datatype; language
/// tagged literals carry `rdf:langString`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: String,
    datatype: String,
    language: Option<String>,
}

impl Literal {
    pub fn string(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: XSD_STRING.to_string(),
            language: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Result<Self, TermError> {
        let datatype = datatype.into();
        check_iri(&datatype)?;
        Ok(Literal {
            lexical: lexical.into(),
            datatype,
            language: None,
        })
    }

    pub fn lang(lexical: impl Into<String>, tag: impl Into<String>) -> Result<Self, TermError> {
        let tag = tag.into();
        if !is_language_tag(&tag) {
            return Err(TermError::InvalidLanguageTag(tag));
        }
        Ok(Literal {
            lexical: lexical.into(),
            datatype: RDF_LANG_STRING.to_string(),
            language: Some(tag),
        })
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &str {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Result<Self, TermError> {
        let iri = iri.into();
        check_iri(&iri)?;
        Ok(Term::Iri(iri))
    }

    pub fn blank(label: impl Into<String>) -> Result<Self, TermError> {
        let label = label.into();
        if !is_blank_label(&label) {
            return Err(TermError::InvalidBlankLabel(label));
        }
        Ok(Term::Blank(label))
    }

    pub fn literal(lexical: impl Into<String>) -> Self {
        Term::Literal(Literal::string(lexical))
    }

    pub fn typed_literal(lexical: impl Into<String>, datatype: impl Into<String>) -> Result<Self, TermError> {
        Literal::typed(lexical, datatype).map(Term::Literal)
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    /// Lexical form for literals, the IRI for IRIs and the label for blank nodes.
    pub fn value_str(&self) -> &str {
        match self {
            Term::Iri(iri) => iri,
            Term::Blank(label) => label,
            Term::Literal(lit) => &lit.lexical,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Blank(label) => write!(f, "_:{label}"),
            Term::Literal(lit) => {
                f.write_str("\"")?;
                for c in lit.lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(tag) = &lit.language {
                    write!(f, "@{tag}")
                } else if lit.datatype != XSD_STRING {
                    write!(f, "^^<{}>", lit.datatype)
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// IRIs must be absolute (`scheme:rest`) and free of whitespace, angle
/// brackets and the other characters N-Triples forbids inside `<...>`.
pub fn check_iri(iri: &str) -> Result<(), TermError> {
    let bad = || TermError::InvalidIri(iri.to_string());
    let (scheme, rest) = iri.split_once(':').ok_or_else(bad)?;
    let mut chars = scheme.chars();
    let scheme_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    if !scheme_ok || rest.is_empty() {
        return Err(bad());
    }
    if iri.chars().any(|c| {
        c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
    }) {
        return Err(bad());
    }
    Ok(())
}

pub fn is_blank_label(label: &str) -> bool {
    let mut chars = label.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric())
}

fn is_language_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let first = parts.next().unwrap_or_default();
    !first.is_empty()
        && first.chars().all(|c| c.is_ascii_alphabetic())
        && parts.all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_rules() {
        assert!(Term::iri("http://a").is_ok());
        assert!(Term::iri("urn:entity:room123").is_ok());
        assert!(Term::iri("").is_err());
        assert!(Term::iri("http://a b").is_err());
        assert!(Term::iri("http://a>").is_err());
        assert!(Term::iri("relative/path").is_err());
    }

    #[test]
    fn blank_labels() {
        assert!(Term::blank("b0").is_ok());
        assert!(Term::blank("0b").is_err());
        assert!(Term::blank("a_b").is_err());
    }

    #[test]
    fn literal_display() {
        assert_eq!(Term::literal("a\"b").to_string(), r#""a\"b""#);
        let t = Term::typed_literal("25", format!("{XSD}integer")).unwrap();
        assert_eq!(t.to_string(), "\"25\"^^<http://www.w3.org/2001/XMLSchema#integer>");
        let l = Term::Literal(Literal::lang("salle", "fr-BE").unwrap());
        assert_eq!(l.to_string(), "\"salle\"@fr-BE");
    }

    #[test]
    fn explicit_string_datatype_equals_plain() {
        assert_eq!(Term::typed_literal("x", XSD_STRING).unwrap(), Term::literal("x"));
    }
}
