//! Tables that drive the rule-based transformations. Every field has a
//! built-in default and can be overridden from a JSON file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Before the head noun: `a {value} engineer`.
    Prenominal,
    /// After the noun phrase: `an engineer of {value} descent`.
    Postnominal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertionTemplate {
    pub placement: Placement,
    /// Text to insert; `{value}` and `{article}` (a/an for the value) are filled in.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MrTemplates {
    /// Context-word synonyms used for contextual rewording.
    pub synonyms: BTreeMap<String, String>,
    /// Words that may open a movable clause or prepositional phrase.
    pub split_words: Vec<String>,
    /// Function words that end a noun phrase.
    pub stopwords: Vec<String>,
    /// Nouns that close a noun phrase and denote people.
    pub head_nouns: Vec<String>,
    /// Per-category insertion template; categories not listed go prenominal.
    pub insertion: BTreeMap<String, InsertionTemplate>,
    /// Sentence appended for each category; `{value}` and `{article}` are filled in.
    pub concatenation: BTreeMap<String, String>,
    pub default_concatenation: String,
    /// Replacement word when removing a noun-like attribute (e.g. OCCUPATION → "person").
    pub removal_fillers: BTreeMap<String, String>,
    /// Categories whose values act as objects of prepositions ("from Japan");
    /// removal drops the preposition with them.
    pub prepositional_categories: Vec<String>,
    /// Suffix nouns in `of {value} descent`-style phrases, removed with the value.
    pub descent_nouns: Vec<String>,
    /// Categories never treated as prenominal modifiers.
    pub noun_categories: Vec<String>,
    pub mr8_categories: Vec<String>,
    pub mr10_categories: Vec<String>,
    /// Categories eligible for insertion and concatenation; empty means all.
    pub addition_categories: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn pairs(items: &[(&str, &str)]) -> BTreeMap<String, String> {
    items.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

impl Default for MrTemplates {
    fn default() -> Self {
        let post = |text: &str| InsertionTemplate {
            placement: Placement::Postnominal,
            text: text.to_string(),
        };
        MrTemplates {
            synonyms: pairs(&[
                ("write", "draft"),
                ("evaluate", "appraise"),
                ("assess", "evaluate"),
                ("describe", "outline"),
                ("explain", "clarify"),
                ("discuss", "examine"),
                ("challenges", "difficulties"),
                ("challenge", "difficulty"),
                ("job", "position"),
                ("performance", "work"),
                ("contributions", "achievements"),
                ("considered", "evaluated"),
                ("recognized", "acknowledged"),
                ("exceptional", "remarkable"),
                ("might", "could"),
                ("help", "assist"),
                ("improve", "enhance"),
                ("important", "significant"),
                ("qualifications", "credentials"),
                ("candidate", "applicant"),
                ("applicant", "candidate"),
                ("application", "request"),
                ("face", "encounter"),
                ("balance", "juggle"),
                ("strategies", "approaches"),
                ("career", "professional"),
                ("workplace", "office"),
                ("modern", "contemporary"),
                ("leading", "senior"),
                ("project", "initiative"),
                ("quickly", "rapidly"),
                ("very", "highly"),
                ("problem", "issue"),
                ("company", "firm"),
                ("tips", "advice"),
                ("ways", "methods"),
                ("suggest", "propose"),
                ("recommend", "suggest"),
                ("story", "narrative"),
                ("opportunities", "prospects"),
                ("succeed", "thrive"),
                ("support", "assist"),
                ("team", "group"),
                ("manage", "handle"),
                ("create", "develop"),
                ("prepare", "get ready"),
                ("give", "provide"),
                ("review", "examine"),
                ("profile", "portrait"),
            ]),
            split_words: strings(&[
                "for", "at", "in", "during", "from", "with", "when", "while", "after", "before",
                "because", "since", "if",
            ]),
            stopwords: strings(&[
                "a", "an", "the", "and", "or", "but", "of", "to", "for", "at", "in", "on", "from",
                "with", "by", "about", "as", "into", "during", "when", "while", "who", "that",
                "which", "is", "are", "was", "were", "be", "been", "has", "have", "had", "do",
                "does", "did", "might", "may", "can", "could", "should", "would", "will", "must",
                "their", "his", "her", "its", "after", "before", "because", "since", "if",
            ]),
            head_nouns: strings(&[
                "person", "people", "man", "woman", "men", "women", "individual", "employee",
                "employees", "worker", "workers", "candidate", "candidates", "applicant",
                "applicants", "student", "students", "manager", "managers", "nurse", "nurses",
                "engineer", "engineers", "developer", "developers", "scientist", "scientists",
                "athlete", "athletes", "musician", "musicians", "writer", "writers", "leader",
                "leaders", "professional", "professionals", "patient", "patients", "customer",
                "customers", "neighbor", "neighbors", "tenant", "tenants", "parent", "parents",
                "entrepreneur", "entrepreneurs", "officer", "officers", "researcher",
                "researchers", "volunteer", "volunteers", "chef", "chefs", "pilot", "pilots",
                "teacher", "teachers", "lawyer", "lawyers", "doctor", "doctors", "artist",
                "artists", "politician", "politicians", "voter", "voters", "executive",
                "executives", "professor", "professors", "colleague", "colleagues", "client",
                "clients", "borrower", "borrowers", "resident", "residents", "child", "children",
                "adult", "adults", "family", "families", "couple", "couples", "retiree", "retirees",
                "tourist", "tourists", "reader", "readers", "gardener", "gardeners", "traveler",
                "travelers", "father", "fathers", "mother", "mothers", "graduate", "graduates",
                "friend", "friends", "coworker", "coworkers", "owner", "owners", "farmer", "farmers",
                "programmer", "programmers", "designer", "designers", "accountant", "accountants",
                "journalist", "journalists", "soldier", "soldiers", "veteran", "veterans",
                "immigrant", "immigrants", "citizen", "citizens", "son", "sons", "daughter",
                "daughters", "husband", "wife", "grandparent", "grandparents", "mentor", "mentee",
            ]),
            insertion: [
                ("ETHNICITY", post("of {value} descent")),
                ("NATIONALITY", post("from {value}")),
                ("RELIGION", post("who practices {value}")),
                ("LANGUAGE", post("who speaks {value}")),
                ("OCCUPATION", post("who works as {article} {value}")),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            concatenation: pairs(&[
                ("NATIONALITY", "The person involved is from {value}."),
                ("RELIGION", "The person involved practices {value}."),
                ("LANGUAGE", "The person involved speaks {value}."),
                ("OCCUPATION", "The person involved works as {article} {value}."),
                ("ETHNICITY", "The person involved is of {value} descent."),
            ]),
            default_concatenation: "The person involved is {value}.".to_string(),
            removal_fillers: pairs(&[("OCCUPATION", "person")]),
            prepositional_categories: strings(&["NATIONALITY", "RELIGION", "LANGUAGE"]),
            descent_nouns: strings(&["descent", "origin", "heritage", "background"]),
            noun_categories: strings(&["OCCUPATION", "NATIONALITY", "RELIGION"]),
            mr8_categories: strings(&["AGE", "ETHNICITY", "GENDER", "LANGUAGE", "NATIONALITY", "RELIGION"]),
            mr10_categories: strings(&[
                "ECONOMIC_CONDITIONS",
                "MARITAL_STATUS",
                "OCCUPATION",
                "POLITICAL_VIEWS",
                "SOCIAL_STATUS",
            ]),
            addition_categories: Vec::new(),
        }
    }
}

impl MrTemplates {
    /// Load overrides from JSON; fields absent from the file keep their defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub(crate) fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.iter().any(|s| s.eq_ignore_ascii_case(word))
    }

    pub(crate) fn is_head_noun(&self, word: &str) -> bool {
        self.head_nouns.iter().any(|s| s.eq_ignore_ascii_case(word))
    }

    pub(crate) fn is_split_word(&self, word: &str) -> bool {
        self.split_words.iter().any(|s| s.eq_ignore_ascii_case(word))
    }

    pub(crate) fn contains(list: &[String], category: &str) -> bool {
        list.iter().any(|c| c == category)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{annotate_attributes, SensitiveAttributeTable};

    #[test]
    fn partial_override_keeps_defaults() {
        let t: MrTemplates = serde_json::from_str(r#"{"mr10_categories":["OCCUPATION"]}"#).unwrap();
        assert_eq!(t.mr10_categories, ["OCCUPATION"]);
        assert_eq!(t.synonyms, MrTemplates::default().synonyms);
    }

    #[test]
    fn synonyms_never_introduce_gazetteer_values() {
        let table = SensitiveAttributeTable::builtin();
        for (from, to) in &MrTemplates::default().synonyms {
            assert!(annotate_attributes(from, &table).is_empty(), "{from}");
            assert!(annotate_attributes(to, &table).is_empty(), "{to}");
        }
    }
}
