use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ValidationError;

fn is_slug(s: &str, first: fn(u8) -> bool, rest: fn(u8) -> bool, min: usize, max: usize) -> bool {
    let bytes = s.as_bytes();
    bytes.len() >= min
        && bytes.len() <= max
        && first(bytes[0])
        && bytes[1..].iter().all(|&b| rest(b))
}

/// `[a-z0-9][a-z0-9_-]{0,63}`, used for local ids, table names, attributes,
/// concept ids and etype ids.
pub fn is_valid_slug(s: &str) -> bool {
    is_slug(
        s,
        |b| b.is_ascii_lowercase() || b.is_ascii_digit(),
        |b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-',
        1,
        64,
    )
}

/// `[a-z][a-z0-9-]{1,31}`
pub fn is_valid_node_id(s: &str) -> bool {
    is_slug(
        s,
        |b| b.is_ascii_lowercase(),
        |b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-',
        2,
        32,
    )
}

/// Loose BCP-47 shape check: a 2-3 letter primary subtag followed by
/// alphanumeric subtags of 1-8 characters.
pub fn is_valid_language_tag(s: &str) -> bool {
    let mut parts = s.split('-');
    let Some(primary) = parts.next() else {
        return false;
    };
    (2..=3).contains(&primary.len())
        && primary.bytes().all(|b| b.is_ascii_alphabetic())
        && parts.all(|p| (1..=8).contains(&p.len()) && p.bytes().all(|b| b.is_ascii_alphanumeric()))
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident, $check:path, $what:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Result<Self, ValidationError> {
                let s = s.into();
                if $check(&s) {
                    Ok(Self(s))
                } else {
                    Err(ValidationError::new(
                        concat!("invalid-", $what),
                        format!(concat!("`{}` is not a valid ", $what), s),
                    ))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = ValidationError;
            fn try_from(s: String) -> Result<Self, Self::Error> {
                Self::new(s)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl FromStr for $name {
            type Err = ValidationError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Identifier of a node within the mesh.
    NodeId,
    is_valid_node_id,
    "node-id"
);
string_id!(
    /// Identifier of a dataset within its node.
    LocalId,
    is_valid_slug,
    "local-id"
);
