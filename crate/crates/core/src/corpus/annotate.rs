//! Leftmost-longest, whole-word gazetteer matching.

use serde::{Deserialize, Serialize};

use super::gazetteer::{fold_char, Category, SensitiveAttributeTable};

/// A sensitive-attribute occurrence inside a prompt. Offsets count
/// characters (not bytes); `end` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpan {
    pub category: Category,
    pub value: String,
    pub start: usize,
    pub end: usize,
}

impl AttributeSpan {
    /// Byte range of this span within `text`.
    pub fn byte_range(&self, text: &str) -> std::ops::Range<usize> {
        char_to_byte(text, self.start)..char_to_byte(text, self.end)
    }
}

/// Byte offset of the `idx`-th character (or `text.len()` past the end).
pub fn char_to_byte(text: &str, idx: usize) -> usize {
    text.char_indices()
        .nth(idx)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-'
}

/// Find every gazetteer value in `text`.
///
/// Matching is case-insensitive and whole-word (hyphens count as word
/// characters, so `middle-class` is one word and `American` does not match
/// inside `Latin-American`). At each word start the longest value wins, and
/// scanning resumes after the match, so spans never overlap.
pub fn annotate_attributes(text: &str, table: &SensitiveAttributeTable) -> Vec<AttributeSpan> {
    let chars: Vec<char> = text.chars().map(fold_char).collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let at_word_start = is_word_char(chars[i]) && (i == 0 || !is_word_char(chars[i - 1]));
        if !at_word_start {
            i += 1;
            continue;
        }
        let hit = table.patterns().iter().find(|p| {
            let end = i + p.chars.len();
            end <= chars.len()
                && chars[i..end] == p.chars[..]
                && (end == chars.len() || !is_word_char(chars[end]))
        });
        match hit {
            Some(p) => {
                spans.push(AttributeSpan {
                    category: p.category.clone(),
                    value: p.value.clone(),
                    start: i,
                    end: i + p.chars.len(),
                });
                i += p.chars.len();
            }
            None => i += 1,
        }
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(text: &str) -> Vec<(String, String)> {
        annotate_attributes(text, &SensitiveAttributeTable::builtin())
            .into_iter()
            .map(|s| (s.category.to_string(), s.value))
            .collect()
    }

    #[test]
    fn young_asian_employee() {
        assert_eq!(
            simple("Evaluate the performance of a young Asian employee."),
            vec![
                ("AGE".to_string(), "young".to_string()),
                ("ETHNICITY".to_string(), "Asian".to_string())
            ]
        );
    }

    #[test]
    fn no_match() {
        assert!(simple("Assess a loan application.").is_empty());
    }

    #[test]
    fn multiword_value_wins() {
        let t = SensitiveAttributeTable::builtin();
        let spans = annotate_attributes("a Native American artist", &t);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].value, "Native American");
        assert_eq!((spans[0].start, spans[0].end), (2, 17));
        assert_eq!(spans[1].value, "artist");
    }

    #[test]
    fn whole_words_only() {
        assert!(simple("The teachers met an oldster.").is_empty());
        assert!(simple("A non-Hispanic voter").is_empty());
        assert_eq!(simple("A middle-class voter").len(), 1);
    }

    #[test]
    fn char_offsets_survive_multibyte_text() {
        let t = SensitiveAttributeTable::builtin();
        let text = "Café owner, a female chef";
        let spans = annotate_attributes(text, &t);
        assert_eq!(spans.len(), 1);
        assert_eq!(&text[spans[0].byte_range(text)], "female");
        assert_eq!(spans[0].start, 14);
    }
}
