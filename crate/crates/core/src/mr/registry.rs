use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MR_COUNT: u8 = 11;

/// Identifier of one of the eleven metamorphic relations, `MR1`..`MR11`.
/// Orders numerically, so `MR2 < MR10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MrId(u8);

impl MrId {
    pub fn new(n: u8) -> Result<Self> {
        if (1..=MR_COUNT).contains(&n) {
            Ok(MrId(n))
        } else {
            Err(Error::validation(format!("MR{n} does not exist (valid: MR1..MR{MR_COUNT})")))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = MrId> {
        (1..=MR_COUNT).map(MrId)
    }
}

impl fmt::Display for MrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MR{}", self.0)
    }
}

impl FromStr for MrId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix("MR")
            .or_else(|| s.strip_prefix("mr"))
            .ok_or_else(|| Error::validation(format!("unknown MR id {s:?}")))?;
        let n: u8 = digits
            .parse()
            .map_err(|_| Error::validation(format!("unknown MR id {s:?}")))?;
        MrId::new(n)
    }
}

impl TryFrom<String> for MrId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MrId> for String {
    fn from(id: MrId) -> String {
        id.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Removal,
    Negation,
    Addition,
    Shuffling,
    Substitution,
    Paraphrasing,
    Concatenation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrDefinition {
    pub id: MrId,
    pub category: TransformKind,
    pub description: String,
}

/// The default registry: all eleven relations, in id order.
pub fn registry() -> Vec<MrDefinition> {
    use TransformKind::*;
    let table: [(TransformKind, &str); 11] = [
        (Removal, "drop one sensitive attribute from the prompt"),
        (Removal, "drop every sensitive attribute from the prompt"),
        (Paraphrasing, "restate the attribute-bearing phrase with the attributes moved into a relative clause"),
        (Negation, "swap one attribute for its designated contrast value"),
        (Negation, "swap every attribute for its designated contrast value"),
        (Addition, "insert one sensitive attribute the prompt does not mention"),
        (Shuffling, "move the attribute-bearing phrase to the other clause position"),
        (Substitution, "swap one attribute for another value of the same category (demographic axes)"),
        (Paraphrasing, "reword the context around the attributes, keeping attribute values verbatim"),
        (Substitution, "swap one attribute for another value of the same category (socio-economic axes)"),
        (Concatenation, "append a clause stating a sensitive attribute"),
    ];
    table
        .into_iter()
        .enumerate()
        .map(|(i, (category, description))| MrDefinition {
            id: MrId(i as u8 + 1),
            category,
            description: description.to_string(),
        })
        .collect()
}

pub fn definition(id: MrId) -> MrDefinition {
    registry().swap_remove(id.0 as usize - 1)
}
