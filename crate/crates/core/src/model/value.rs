//! Typed cell values shared by standardised tables and graph literals.

use std::cmp::Ordering;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Datatype {
    String,
    Integer,
    Decimal,
    Boolean,
    Date,
    Identifier,
}

impl Datatype {
    pub const ALL: [Datatype; 6] = [
        Datatype::String,
        Datatype::Integer,
        Datatype::Decimal,
        Datatype::Boolean,
        Datatype::Date,
        Datatype::Identifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Datatype::String => "string",
            Datatype::Integer => "integer",
            Datatype::Decimal => "decimal",
            Datatype::Boolean => "boolean",
            Datatype::Date => "date",
            Datatype::Identifier => "identifier",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A decimal kept in normalized textual form: no leading `+`, no redundant
/// leading zeros, `.` separator. Fractional digits are kept as written.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decimal(String);

impl Decimal {
    /// Accepts `[+-]?[0-9]+(\.[0-9]+)?`.
    pub fn parse(s: &str) -> Option<Self> {
        let (negative, body) = match s.as_bytes().first()? {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if let Some(f) = frac {
            if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
        }
        let int = int.trim_start_matches('0');
        let int = if int.is_empty() { "0" } else { int };
        let zero = int == "0" && frac.is_none_or(|f| f.bytes().all(|b| b == b'0'));
        let mut out = String::new();
        if negative && !zero {
            out.push('-');
        }
        out.push_str(int);
        if let Some(f) = frac {
            out.push('.');
            out.push_str(f);
        }
        Some(Decimal(out))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn parts(&self) -> (bool, &str, &str) {
        let (neg, body) = match self.0.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, self.0.as_str()),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        (neg, int, frac)
    }

    fn cmp_magnitude(a: (&str, &str), b: (&str, &str)) -> Ordering {
        a.0.len()
            .cmp(&b.0.len())
            .then_with(|| a.0.cmp(b.0))
            .then_with(|| {
                let width = a.1.len().max(b.1.len());
                let pad = |f: &str| format!("{f:0<width$}");
                pad(a.1).cmp(&pad(b.1))
            })
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        let (na, ia, fa) = self.parts();
        let (nb, ib, fb) = other.parts();
        let numeric = match (na, nb) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => Self::cmp_magnitude((ia, fa), (ib, fb)),
            (true, true) => Self::cmp_magnitude((ib, fb), (ia, fa)),
        };
        numeric.then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    String(String),
    Integer(i64),
    Decimal(Decimal),
    Boolean(bool),
    Date(NaiveDate),
    Identifier(String),
}

/// A table cell: `None` is null.
pub type Cell = Option<Value>;

impl Value {
    pub fn datatype(&self) -> Datatype {
        match self {
            Value::String(_) => Datatype::String,
            Value::Integer(_) => Datatype::Integer,
            Value::Decimal(_) => Datatype::Decimal,
            Value::Boolean(_) => Datatype::Boolean,
            Value::Date(_) => Datatype::Date,
            Value::Identifier(_) => Datatype::Identifier,
        }
    }

    /// Canonical lexical form, as written to CSV cells and Turtle literals.
    pub fn lexical(&self) -> String {
        match self {
            Value::String(s) | Value::Identifier(s) => s.clone(),
            Value::Integer(i) => i.to_string(),
            Value::Decimal(d) => d.as_str().to_owned(),
            Value::Boolean(b) => b.to_string(),
            Value::Date(d) => d.format("%Y-%m-%d").to_string(),
        }
    }

    /// Parses a canonical lexical form. Only the forms `lexical` produces
    /// (plus leading `+`/zeros on numbers) are accepted.
    pub fn parse_lexical(datatype: Datatype, s: &str) -> Option<Value> {
        match datatype {
            Datatype::String => Some(Value::String(s.to_owned())),
            Datatype::Identifier => Some(Value::Identifier(s.to_owned())),
            Datatype::Integer => parse_integer(s).map(Value::Integer),
            Datatype::Decimal => Decimal::parse(s).map(Value::Decimal),
            Datatype::Boolean => match s {
                "true" => Some(Value::Boolean(true)),
                "false" => Some(Value::Boolean(false)),
                _ => None,
            },
            Datatype::Date => parse_iso_date(s).map(Value::Date),
        }
    }
}

pub(crate) fn parse_integer(s: &str) -> Option<i64> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Strict `YYYY-MM-DD`.
pub fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    let b = s.as_bytes();
    let shape = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit());
    if !shape {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        use Value::*;
        match (self, other) {
            (String(a), String(b)) | (Identifier(a), Identifier(b)) => a.cmp(b),
            (Integer(a), Integer(b)) => a.cmp(b),
            (Decimal(a), Decimal(b)) => a.cmp(b),
            (Boolean(a), Boolean(b)) => a.cmp(b),
            (Date(a), Date(b)) => a.cmp(b),
            _ => self.datatype().cmp(&other.datatype()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexical())
    }
}
