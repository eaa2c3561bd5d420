//! Element identifiers.

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A case-sensitive identifier token matching `[A-Za-z_][A-Za-z0-9_-]*`.
///
/// Identifiers name levels, goals, strategies, metrics, questions, context
/// factors and assumptions. They are plain tokens so that serialized grids
/// stay printable and diffable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Id(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid identifier `{0}`: expected [A-Za-z_][A-Za-z0-9_-]*")]
pub struct InvalidId(pub String);

impl Id {
    pub fn new(raw: impl Into<String>) -> Result<Self, InvalidId> {
        let raw = raw.into();
        if Self::is_valid(&raw) {
            Ok(Id(raw))
        } else {
            Err(InvalidId(raw))
        }
    }

    /// Constructs an id without checking the token grammar. Structural
    /// validation later reports such ids as invalid.
    pub fn unchecked(raw: impl Into<String>) -> Self {
        Id(raw.into())
    }

    pub fn is_valid(raw: &str) -> bool {
        let mut chars = raw.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Id {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Id {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl std::str::FromStr for Id {
    type Err = InvalidId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Id::new(s)
    }
}

/// Shorthand for building ids in tests and fixtures. Panics on invalid input.
pub fn id(raw: &str) -> Id {
    Id::new(raw).expect("valid identifier")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accepts_token_grammar() {
        for ok in ["G1", "_x", "goal-2", "a_b-c9", "Z"] {
            assert!(Id::is_valid(ok), "{ok}");
        }
        for bad in ["", "1G", "-a", "a b", "a.b", "gqm:G1", "é"] {
            assert!(!Id::is_valid(bad), "{bad}");
        }
    }

    #[test]
    fn case_sensitive() {
        assert_ne!(id("g1"), id("G1"));
    }

    proptest! {
        #[test]
        fn generated_tokens_are_valid(s in "[A-Za-z_][A-Za-z0-9_-]{0,12}") {
            prop_assert!(Id::new(s.clone()).is_ok());
            let parsed = Id::new(s.clone()).unwrap();
            prop_assert_eq!(parsed.as_str(), s.as_str());
        }

        #[test]
        fn leading_digit_rejected(s in "[0-9][A-Za-z0-9_]{0,8}") {
            prop_assert!(Id::new(s).is_err());
        }
    }
}
