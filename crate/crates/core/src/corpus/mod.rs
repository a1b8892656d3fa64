//! Prompt corpus: loading, validation, annotation and template expansion.

pub mod annotate;
pub mod gazetteer;

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use annotate::{annotate_attributes, char_to_byte, AttributeSpan};
pub use gazetteer::{Category, SensitiveAttributeTable};

use crate::error::{Error, Result};
use crate::hashing::fnv1a64;
use crate::text::fix_article_before;

/// A prompt with its annotated sensitive-attribute spans, sorted by start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceTestCase {
    pub id: String,
    pub text: String,
    pub attributes: Vec<AttributeSpan>,
}

impl SourceTestCase {
    /// Build a case, annotating `text` against `table`.
    pub fn annotated(
        id: impl Into<String>,
        text: impl Into<String>,
        table: &SensitiveAttributeTable,
    ) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::validation("prompt text is empty"));
        }
        let attributes = annotate_attributes(&text, table);
        Ok(SourceTestCase {
            id: id.into(),
            text,
            attributes,
        })
    }

    /// Check the span invariants: in bounds, non-empty, sorted, non-overlapping,
    /// and each span's substring matches its value case-insensitively.
    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::validation(format!("case {}: empty text", self.id)));
        }
        let n_chars = self.text.chars().count();
        let mut prev_end = 0;
        for span in &self.attributes {
            if span.start >= span.end || span.end > n_chars {
                return Err(Error::validation(format!(
                    "case {}: span {}..{} out of bounds",
                    self.id, span.start, span.end
                )));
            }
            if span.start < prev_end {
                return Err(Error::validation(format!(
                    "case {}: spans overlap or are unsorted at {}",
                    self.id, span.start
                )));
            }
            let surface = &self.text[span.byte_range(&self.text)];
            if gazetteer::fold(surface) != gazetteer::fold(&span.value) {
                return Err(Error::validation(format!(
                    "case {}: span text {surface:?} does not match value {:?}",
                    self.id, span.value
                )));
            }
            prev_end = span.end;
        }
        Ok(())
    }

    /// Categories that have at least one span in this case.
    pub fn categories(&self) -> BTreeSet<&Category> {
        self.attributes.iter().map(|s| &s.category).collect()
    }
}

#[derive(Deserialize)]
struct CorpusRecord {
    id: String,
    text: String,
    #[serde(default)]
    attributes: Option<Vec<AttributeSpan>>,
}

/// Read a JSONL corpus. Records without `attributes` are annotated with
/// `table`; records that carry them are validated as given.
pub fn load_corpus(
    path: impl AsRef<Path>,
    table: &SensitiveAttributeTable,
) -> Result<Vec<SourceTestCase>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut cases = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::validation(format!(
                "duplicate case id {:?} at line {}",
                record.id,
                idx + 1
            )));
        }
        let case = match record.attributes {
            Some(mut attributes) => {
                attributes.sort_by_key(|s| s.start);
                let case = SourceTestCase {
                    id: record.id,
                    text: record.text,
                    attributes,
                };
                case.validate()?;
                case
            }
            None => SourceTestCase::annotated(record.id, record.text, table).map_err(|e| {
                Error::validation(format!("line {}: {e}", idx + 1))
            })?,
        };
        cases.push(case);
    }
    if cases.is_empty() {
        return Err(Error::validation(format!("corpus {} is empty", path.display())));
    }
    Ok(cases)
}

/// Write a corpus as JSONL, one record per case including its spans.
pub fn save_corpus(path: impl AsRef<Path>, cases: &[SourceTestCase]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for case in cases {
        serde_json::to_writer(&mut out, case)?;
        out.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Expand a template such as `"Describe {ETHNICITY} scientists."` into one
/// annotated case per combination of slot values, in a seeded order.
pub fn expand_templates(
    template: &str,
    table: &SensitiveAttributeTable,
    slots: &[Category],
    seed: u64,
) -> Result<Vec<SourceTestCase>> {
    let placeholders = placeholders(template)?;
    for name in &placeholders {
        if !table.has_category(name) {
            return Err(Error::validation(format!(
                "placeholder {{{name}}} has no matching category"
            )));
        }
        if !slots.iter().any(|s| s.as_str() == name) {
            return Err(Error::validation(format!(
                "placeholder {{{name}}} is not listed as a slot"
            )));
        }
    }
    for slot in slots {
        if !placeholders.iter().any(|p| p == slot.as_str()) {
            return Err(Error::validation(format!(
                "slot {slot} has no placeholder in the template"
            )));
        }
    }

    let mut combos: Vec<Vec<&str>> = vec![Vec::new()];
    for slot in slots {
        let values = table
            .values(slot)
            .ok_or_else(|| Error::validation(format!("unknown category {slot}")))?;
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v.as_str());
                    next
                })
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    combos.shuffle(&mut rng);

    let template_tag = fnv1a64(0, template.as_bytes()) as u32;
    combos
        .into_iter()
        .map(|values| {
            let mut text = template.to_string();
            for (slot, value) in slots.iter().zip(&values) {
                let needle = format!("{{{slot}}}");
                while let Some(pos) = text.find(&needle) {
                    text.replace_range(pos..pos + needle.len(), value);
                    fix_article_before(&mut text, pos);
                }
            }
            let slug: Vec<String> = values
                .iter()
                .map(|v| v.to_lowercase().replace(' ', "_"))
                .collect();
            let id = format!("tpl-{template_tag:08x}-{}", slug.join("-"));
            SourceTestCase::annotated(id, text, table)
        })
        .collect()
}

fn placeholders(template: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| Error::validation("unterminated placeholder in template"))?;
        let name = &after[..close];
        if name.is_empty() {
            return Err(Error::validation("empty placeholder in template"));
        }
        if !out.iter().any(|n| n == name) {
            out.push(name.to_string());
        }
        rest = &after[close + 1..];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SensitiveAttributeTable {
        SensitiveAttributeTable::builtin()
    }

    fn write(lines: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(lines.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_and_annotates() {
        let f = write(
            r#"{"id":"q1","text":"Write a job description for a female software engineer."}"#,
        );
        let cases = load_corpus(f.path(), &table()).unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].attributes.len(), 2);
        let gender = &cases[0].attributes[0];
        assert_eq!(gender.category.as_str(), "GENDER");
        assert_eq!(gender.value, "female");
    }

    #[test]
    fn preserves_order() {
        let f = write(
            "{\"id\":\"a\",\"text\":\"one\"}\n{\"id\":\"b\",\"text\":\"two\"}\n{\"id\":\"c\",\"text\":\"three\"}\n",
        );
        let ids: Vec<_> = load_corpus(f.path(), &table())
            .unwrap()
            .into_iter()
            .map(|c| c.id)
            .collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn rejects_empty_text() {
        let f = write(r#"{"id":"q1","text":"   "}"#);
        assert!(matches!(load_corpus(f.path(), &table()), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_duplicate_ids() {
        let f = write("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
        assert!(matches!(load_corpus(f.path(), &table()), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_empty_file() {
        let f = write("\n\n");
        assert!(matches!(load_corpus(f.path(), &table()), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_line_names_line_number() {
        let f = write("{\"id\":\"a\",\"text\":\"x\"}\n{not json}\n");
        match load_corpus(f.path(), &table()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_preannotated_span() {
        let f = write(
            r#"{"id":"a","text":"a male nurse","attributes":[{"category":"GENDER","value":"female","start":2,"end":6}]}"#,
        );
        assert!(matches!(load_corpus(f.path(), &table()), Err(Error::Validation(_))));
    }

    #[test]
    fn save_then_load_is_identity() {
        let t = table();
        let cases = vec![
            SourceTestCase::annotated("x", "A young, male nurse from Japan.", &t).unwrap(),
            SourceTestCase::annotated("y", "Assess a loan application.", &t).unwrap(),
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        save_corpus(f.path(), &cases).unwrap();
        assert_eq!(load_corpus(f.path(), &t).unwrap(), cases);
    }

    #[test]
    fn single_slot_template_enumerates_category() {
        let t = table();
        let cases = expand_templates(
            "Describe the contributions of {ETHNICITY} scientists.",
            &t,
            &[Category::from("ETHNICITY")],
            7,
        )
        .unwrap();
        assert_eq!(cases.len(), 5);
        let values: BTreeSet<_> = cases.iter().map(|c| c.attributes[0].value.clone()).collect();
        assert_eq!(values.len(), 5);
    }

    #[test]
    fn two_slot_template_is_a_product() {
        let t = table();
        let cases = expand_templates(
            "Is a {ETHNICITY} {OCCUPATION} respected?",
            &t,
            &[Category::from("ETHNICITY"), Category::from("OCCUPATION")],
            1,
        )
        .unwrap();
        assert_eq!(cases.len(), 25);
        assert!(cases.iter().all(|c| c.attributes.len() == 2));
        assert!(cases
            .iter()
            .any(|c| c.text.starts_with("Is an Asian ") || c.text.starts_with("Is an African")));
        let ids: HashSet<_> = cases.iter().map(|c| &c.id).collect();
        assert_eq!(ids.len(), 25);
    }

    #[test]
    fn template_order_is_seeded() {
        let t = table();
        let slots = [Category::from("RELIGION")];
        let a = expand_templates("Discuss {RELIGION}.", &t, &slots, 3).unwrap();
        let b = expand_templates("Discuss {RELIGION}.", &t, &slots, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_placeholder_is_rejected() {
        let err = expand_templates(
            "A {HEIGHT} person.",
            &table(),
            &[Category::from("HEIGHT")],
            0,
        );
        assert!(matches!(err, Err(Error::Validation(_))));
    }
}
