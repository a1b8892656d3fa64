//! Sensitive-attribute gazetteer: categories, surface values and contrast pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/gazetteer.json");

/// Name of a sensitive-attribute category, e.g. `GENDER` or `ETHNICITY`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Category(String);

impl Category {
    pub fn new(name: impl Into<String>) -> Self {
        Category(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Category {
    fn from(s: &str) -> Self {
        Category(s.to_string())
    }
}

/// Per-character case fold that keeps character offsets aligned with the input.
pub(crate) fn fold_char(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

pub(crate) fn fold(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

#[derive(Debug, Clone)]
pub(crate) struct Pattern {
    pub chars: Vec<char>,
    pub category: Category,
    pub value: String,
}

/// Gazetteer of sensitive attributes.
///
/// Every category holds at least two values, values are unique after case
/// folding, and `contrast` is a fixed-point-free bijection inside each
/// category (an involution when the category has even cardinality).
#[derive(Debug, Clone)]
pub struct SensitiveAttributeTable {
    categories: BTreeMap<Category, Vec<String>>,
    contrast: BTreeMap<String, String>,
    lookup: HashMap<String, (Category, String)>,
    patterns: Vec<Pattern>,
}

impl PartialEq for SensitiveAttributeTable {
    fn eq(&self, other: &Self) -> bool {
        self.categories == other.categories && self.contrast == other.contrast
    }
}

impl SensitiveAttributeTable {
    /// Build and validate a table. Categories missing from `contrast` get the
    /// default rule: adjacent pairs (0↔1, 2↔3, ...) for even cardinality,
    /// cyclic-next for odd cardinality.
    pub fn new(
        categories: BTreeMap<Category, Vec<String>>,
        contrast: BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut lookup: HashMap<String, (Category, String)> = HashMap::new();
        for (cat, values) in &categories {
            if values.len() < 2 {
                return Err(Error::validation(format!(
                    "category {cat} needs at least 2 values, has {}",
                    values.len()
                )));
            }
            for v in values {
                if v.trim().is_empty() || v.trim() != v {
                    return Err(Error::validation(format!(
                        "category {cat} has a blank or padded value {v:?}"
                    )));
                }
                if let Some((other, _)) = lookup.insert(fold(v), (cat.clone(), v.clone())) {
                    return Err(Error::validation(format!(
                        "value {v:?} appears twice (categories {other} and {cat})"
                    )));
                }
            }
        }

        let given: BTreeMap<String, String> = contrast
            .iter()
            .map(|(k, v)| (fold(k), fold(v)))
            .collect();
        for k in given.keys() {
            if !lookup.contains_key(k) {
                return Err(Error::validation(format!(
                    "contrast entry for unknown value {k:?}"
                )));
            }
        }

        let mut resolved = BTreeMap::new();
        for (cat, values) in &categories {
            let folded: Vec<String> = values.iter().map(|v| fold(v)).collect();
            let explicit = folded.iter().filter(|v| given.contains_key(*v)).count();
            let map: Vec<(String, String)> = if explicit == 0 {
                default_contrast(&folded)
            } else if explicit == folded.len() {
                folded.iter().map(|v| (v.clone(), given[v].clone())).collect()
            } else {
                return Err(Error::validation(format!(
                    "contrast for category {cat} is only partially specified"
                )));
            };
            let members: BTreeSet<&String> = folded.iter().collect();
            let mut images = BTreeSet::new();
            for (from, to) in &map {
                if !members.contains(to) {
                    return Err(Error::validation(format!(
                        "contrast of {from:?} leaves category {cat}"
                    )));
                }
                if from == to {
                    return Err(Error::validation(format!("{from:?} contrasts with itself")));
                }
                images.insert(to.clone());
            }
            if images.len() != folded.len() {
                return Err(Error::validation(format!(
                    "contrast for category {cat} is not a bijection"
                )));
            }
            if folded.len().is_multiple_of(2) {
                let m: HashMap<&String, &String> = map.iter().map(|(a, b)| (a, b)).collect();
                if map.iter().any(|(a, b)| m[b] != a) {
                    return Err(Error::validation(format!(
                        "contrast for even category {cat} must be an involution"
                    )));
                }
            }
            for (from, to) in map {
                let canonical = lookup[&to].1.clone();
                resolved.insert(from, canonical);
            }
        }

        let mut patterns: Vec<Pattern> = lookup
            .iter()
            .map(|(k, (cat, v))| Pattern {
                chars: k.chars().collect(),
                category: cat.clone(),
                value: v.clone(),
            })
            .collect();
        // longest first, ties by text so matching is deterministic
        patterns.sort_by(|a, b| b.chars.len().cmp(&a.chars.len()).then(a.chars.cmp(&b.chars)));

        Ok(SensitiveAttributeTable {
            categories,
            contrast: resolved,
            lookup,
            patterns,
        })
    }

    /// The shipped gazetteer: the eight experiment categories plus GENDER, AGE
    /// and NATIONALITY.
    pub fn builtin() -> Self {
        Self::from_json_str(BUILTIN).expect("builtin gazetteer is valid")
    }

    /// Parse the gazetteer file format: an object of category → values with an
    /// optional `contrast` object.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: Map<String, Value> = serde_json::from_str(s)?;
        let mut categories = BTreeMap::new();
        let mut contrast = BTreeMap::new();
        for (key, value) in raw {
            if key == "contrast" {
                contrast = serde_json::from_value(value)?;
            } else {
                let values: Vec<String> = serde_json::from_value(value).map_err(|e| {
                    Error::validation(format!("category {key}: expected an array of strings: {e}"))
                })?;
                categories.insert(Category(key), values);
            }
        }
        Self::new(categories, contrast)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Serialize back into the gazetteer file format (with an explicit contrast map).
    pub fn to_json(&self) -> Value {
        let mut out = Map::new();
        for (cat, values) in &self.categories {
            out.insert(cat.0.clone(), Value::from(values.clone()));
        }
        let contrast: Map<String, Value> = self
            .categories
            .values()
            .flatten()
            .map(|v| (v.clone(), Value::from(self.contrast[&fold(v)].clone())))
            .collect();
        out.insert("contrast".into(), Value::Object(contrast));
        Value::Object(out)
    }

    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.categories.keys()
    }

    pub fn values(&self, category: &Category) -> Option<&[String]> {
        self.categories.get(category).map(Vec::as_slice)
    }

    pub fn has_category(&self, name: &str) -> bool {
        self.categories.contains_key(&Category::new(name))
    }

    /// Category and canonical spelling of a surface value (case-insensitive).
    pub fn lookup(&self, value: &str) -> Option<(&Category, &str)> {
        self.lookup.get(&fold(value)).map(|(c, v)| (c, v.as_str()))
    }

    /// The designated contrasting value, in canonical spelling.
    pub fn contrast(&self, value: &str) -> Option<&str> {
        self.contrast.get(&fold(value)).map(String::as_str)
    }

    pub(crate) fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }
}

fn default_contrast(values: &[String]) -> Vec<(String, String)> {
    let n = values.len();
    if n.is_multiple_of(2) {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), values[i ^ 1].clone()))
            .collect()
    } else {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), values[(i + 1) % n].clone()))
            .collect()
    }
}
