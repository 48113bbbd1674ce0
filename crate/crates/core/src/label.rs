use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Safe,
    Dangerous,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Safe, Label::Dangerous];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Safe => "safe",
            Label::Dangerous => "dangerous",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Label::Safe => 0,
            Label::Dangerous => 1,
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Safe => Label::Dangerous,
            Label::Dangerous => Label::Safe,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "safe" | "non-dangerous" | "0" => Ok(Label::Safe),
            "dangerous" | "1" => Ok(Label::Dangerous),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}
