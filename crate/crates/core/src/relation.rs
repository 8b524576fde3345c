use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Relationship between a premise and a hypothesis.
///
/// Serialized as `"contrastive"`, `"entailment"`, `"reasoning"`, `"neutral"`.
/// `"causal"` and `"contrasting"` are accepted as input aliases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Contrastive,
    Entailment,
    Reasoning,
    Neutral,
}

impl Relation {
    /// Canonical class order, used for model outputs and report rows.
    pub const ALL: [Relation; 4] =
        [Relation::Contrastive, Relation::Entailment, Relation::Reasoning, Relation::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Contrastive => "contrastive",
            Relation::Entailment => "entailment",
            Relation::Reasoning => "reasoning",
            Relation::Neutral => "neutral",
        }
    }

    /// Position in [`Relation::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Relation> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation label {0:?}")]
pub struct UnknownRelation(pub String);

impl FromStr for Relation {
    type Err = UnknownRelation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "contrastive" | "contrasting" => Ok(Relation::Contrastive),
            "entailment" => Ok(Relation::Entailment),
            "reasoning" | "causal" => Ok(Relation::Reasoning),
            "neutral" => Ok(Relation::Neutral),
            _ => Err(UnknownRelation(s.to_string())),
        }
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
