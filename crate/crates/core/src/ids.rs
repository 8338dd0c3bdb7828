use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const MAX_ID_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid identifier {0:?}: expected 1-32 chars of [a-z0-9_-]")]
pub struct IdError(pub String);

fn validate(raw: &str) -> Result<(), IdError> {
    let ok = !raw.is_empty()
        && raw.len() <= MAX_ID_LEN
        && raw.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(IdError(raw.to_string()))
    }
}

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(raw: impl Into<String>) -> Result<Self, IdError> {
                let raw = raw.into();
                validate(&raw)?;
                Ok(Self(raw))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = IdError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }
    };
}

name_type!(
    /// Agent identifier. Agent ids double as bus client ids and appear in the
    /// `agent.<id>` mail topics, so they share the topic character set.
    /// Ordering is plain byte order; "lower agent id" always means this order.
    AgentId
);

name_type!(
    /// Team name, e.g. `a` or `b`.
    TeamId
);
