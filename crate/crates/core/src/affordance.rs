//! The four Gibsonian affordances a visual assistant supports. Every trial,
//! value field, and manifold set is tagged with exactly one of them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Action opportunity the operator is exploiting in a trial. The declaration
/// order is the canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Affordance {
    Reachability,
    Passability,
    Manipulability,
    Traversability,
}

impl Affordance {
    pub const ALL: [Affordance; 4] = [
        Affordance::Reachability,
        Affordance::Passability,
        Affordance::Manipulability,
        Affordance::Traversability,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Affordance::Reachability => "reachability",
            Affordance::Passability => "passability",
            Affordance::Manipulability => "manipulability",
            Affordance::Traversability => "traversability",
        }
    }
}

impl fmt::Display for Affordance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Affordance {
    type Err = String;

    /// Case-insensitive parse of the four affordance tokens.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "reachability" => Ok(Affordance::Reachability),
            "passability" => Ok(Affordance::Passability),
            "manipulability" => Ok(Affordance::Manipulability),
            "traversability" => Ok(Affordance::Traversability),
            _ => Err(format!(
                "unknown affordance `{s}`, expected one of reachability, passability, \
                 manipulability, traversability"
            )),
        }
    }
}
