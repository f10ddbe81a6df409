use std::sync::LazyLock;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use regex::Regex;

use crate::rdf::XSD;
use crate::sparql::Decimal;

static INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[+-]?[0-9]+$").unwrap());
static DOUBLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?|[+-]?INF|NaN)$").unwrap()
});

/// Whether `lexical` is in the lexical space of `datatype`. Datatypes
/// without a check here (strings, URIs, unknown XSD types) accept anything.
pub fn lexical_fits(datatype: &str, lexical: &str) -> bool {
    let Some(local) = datatype.strip_prefix(XSD) else {
        return true;
    };
    let int_in =
        |lo: i128, hi: i128| INTEGER.is_match(lexical) && lexical.parse::<i128>().is_ok_and(|v| (lo..=hi).contains(&v));
    match local {
        "decimal" => lexical.trim() == lexical && Decimal::parse(lexical).is_some(),
        "integer" => INTEGER.is_match(lexical),
        "long" => int_in(i64::MIN as i128, i64::MAX as i128),
        "int" => int_in(i32::MIN as i128, i32::MAX as i128),
        "short" => int_in(i16::MIN as i128, i16::MAX as i128),
        "byte" => int_in(i8::MIN as i128, i8::MAX as i128),
        "unsignedLong" => int_in(0, u64::MAX as i128),
        "unsignedInt" => int_in(0, u32::MAX as i128),
        "unsignedShort" => int_in(0, u16::MAX as i128),
        "unsignedByte" => int_in(0, u8::MAX as i128),
        "nonNegativeInteger" => INTEGER.is_match(lexical) && Decimal::parse(lexical) >= Decimal::parse("0"),
        "positiveInteger" => INTEGER.is_match(lexical) && Decimal::parse(lexical) > Decimal::parse("0"),
        "nonPositiveInteger" => INTEGER.is_match(lexical) && Decimal::parse(lexical) <= Decimal::parse("0"),
        "negativeInteger" => INTEGER.is_match(lexical) && Decimal::parse(lexical) < Decimal::parse("0"),
        "double" | "float" => DOUBLE.is_match(lexical),
        "boolean" => matches!(lexical, "true" | "false" | "1" | "0"),
        "dateTime" => {
            DateTime::parse_from_rfc3339(lexical).is_ok()
                || NaiveDateTime::parse_from_str(lexical, "%Y-%m-%dT%H:%M:%S%.f").is_ok()
        }
        "date" => NaiveDate::parse_from_str(lexical, "%Y-%m-%d").is_ok(),
        _ => true,
    }
}

/// A representative lexical form for witness generation.
pub fn sample_lexical(datatype: &str) -> &'static str {
    match datatype.strip_prefix(XSD).unwrap_or_default() {
        "decimal" | "integer" | "long" | "int" | "short" | "byte" | "unsignedLong" | "unsignedInt"
        | "unsignedShort" | "unsignedByte" | "nonNegativeInteger" | "double" | "float" => "0",
        "positiveInteger" => "1",
        "nonPositiveInteger" => "0",
        "negativeInteger" => "-1",
        "boolean" => "true",
        "dateTime" => "1970-01-01T00:00:00Z",
        "date" => "1970-01-01",
        _ => "witness",
    }
}
