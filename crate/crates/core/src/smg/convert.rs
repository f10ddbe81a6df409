use std::str::FromStr;

use rust_decimal::Decimal;
use serde_json::{Number, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{routine}: {message}")]
pub struct ConversionError {
    pub routine: String,
    pub message: String,
}

/// Built-in conversion routines, all computed in exact decimal arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Routine {
    Identity,
    CelsiusToKelvin,
    FahrenheitToCelsius,
    Scale(Decimal),
    StringToNumber,
}

impl Routine {
    /// Looks up a routine id: `identity`, `celsius_to_kelvin`,
    /// `fahrenheit_to_celsius`, `scale:<factor>` or `string_to_number`.
    pub fn parse(id: &str) -> Option<Routine> {
        match id {
            "identity" => Some(Routine::Identity),
            "celsius_to_kelvin" => Some(Routine::CelsiusToKelvin),
            "fahrenheit_to_celsius" => Some(Routine::FahrenheitToCelsius),
            "string_to_number" => Some(Routine::StringToNumber),
            _ => {
                let factor = id.strip_prefix("scale:")?;
                parse_decimal(factor).map(Routine::Scale)
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            Routine::Identity => "identity".into(),
            Routine::CelsiusToKelvin => "celsius_to_kelvin".into(),
            Routine::FahrenheitToCelsius => "fahrenheit_to_celsius".into(),
            Routine::Scale(f) => format!("scale:{f}"),
            Routine::StringToNumber => "string_to_number".into(),
        }
    }

    /// Unit of the output when the routine fixes one.
    pub fn output_unit(&self) -> Option<&'static str> {
        match self {
            Routine::CelsiusToKelvin => Some("kelvin"),
            Routine::FahrenheitToCelsius => Some("celsius"),
            _ => None,
        }
    }

    pub fn apply(&self, input: &Value) -> Result<Value, ConversionError> {
        let fail = |message: String| ConversionError {
            routine: self.id(),
            message,
        };
        match self {
            Routine::Identity => match input {
                Value::String(_) | Value::Number(_) | Value::Bool(_) => Ok(input.clone()),
                other => Err(fail(format!("{other} is not a scalar"))),
            },
            Routine::StringToNumber => {
                let d = match input {
                    Value::String(s) => {
                        parse_decimal(s.trim()).ok_or_else(|| fail(format!("{s:?} is not a number")))?
                    }
                    Value::Number(n) => number_to_decimal(n).ok_or_else(|| fail(format!("{n} is out of range")))?,
                    other => return Err(fail(format!("{other} is not a string"))),
                };
                decimal_to_json(d).ok_or_else(|| fail("result is not representable".into()))
            }
            Routine::CelsiusToKelvin | Routine::FahrenheitToCelsius | Routine::Scale(_) => {
                let Value::Number(n) = input else {
                    return Err(fail(format!("{input} is not a number")));
                };
                let x = number_to_decimal(n).ok_or_else(|| fail(format!("{n} is out of range")))?;
                let y = self.apply_decimal(x).ok_or_else(|| fail(format!("{n} overflows")))?;
                decimal_to_json(y).ok_or_else(|| fail("result is not representable".into()))
            }
        }
    }

    /// The numeric map on decimals; `None` on overflow.
    pub fn apply_decimal(&self, x: Decimal) -> Option<Decimal> {
        match self {
            Routine::Identity | Routine::StringToNumber => Some(x),
            Routine::CelsiusToKelvin => x.checked_add(Decimal::new(27315, 2)),
            Routine::FahrenheitToCelsius => x
                .checked_sub(Decimal::from(32))?
                .checked_mul(Decimal::from(5))?
                .checked_div(Decimal::from(9)),
            Routine::Scale(f) => x.checked_mul(*f),
        }
    }
}

pub fn parse_decimal(s: &str) -> Option<Decimal> {
    Decimal::from_str_exact(s).or_else(|_| Decimal::from_scientific(s)).ok()
}

fn number_to_decimal(n: &Number) -> Option<Decimal> {
    parse_decimal(&n.to_string())
}

/// Integral results become JSON integers; others go through their shortest
/// decimal text.
pub fn decimal_to_json(d: Decimal) -> Option<Value> {
    let d = d.normalize();
    let text = d.to_string();
    if d.is_integer() {
        if let Ok(i) = text.parse::<i64>() {
            return Some(Value::from(i));
        }
    }
    Number::from_str(&text).ok().map(Value::Number)
}
