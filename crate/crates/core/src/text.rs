//! Small surface-text helpers shared by template expansion and the MR engine:
//! a/an agreement, capitalization and word scanning.

use crate::corpus::annotate::is_word_char;

/// The indefinite article that agrees with `word`.
pub fn indefinite_article(word: &str) -> &'static str {
    let w = word.to_lowercase();
    const CONSONANT_SOUND: &[&str] = &["uni", "use", "usu", "uti", "one", "once", "eu", "ur"];
    const SILENT_H: &[&str] = &["hour", "honest", "honor", "honour", "heir"];
    if CONSONANT_SOUND.iter().any(|p| w.starts_with(p)) {
        "a"
    } else if SILENT_H.iter().any(|p| w.starts_with(p)) || w.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

/// Byte range of the word that ends at or before `pos` (skipping whitespace).
fn word_before(text: &str, pos: usize) -> Option<std::ops::Range<usize>> {
    let head = &text[..pos];
    let trimmed = head.trim_end();
    let end = trimmed.len();
    let start = trimmed
        .char_indices()
        .rev()
        .take_while(|(_, c)| is_word_char(*c))
        .last()
        .map(|(i, _)| i)?;
    Some(start..end)
}

/// Byte range of the first word starting at or after `pos`.
pub(crate) fn word_after(text: &str, pos: usize) -> Option<std::ops::Range<usize>> {
    let tail = &text[pos..];
    let (off, _) = tail.char_indices().find(|(_, c)| is_word_char(*c))?;
    let start = pos + off;
    let end = text[start..]
        .char_indices()
        .find(|(_, c)| !is_word_char(*c))
        .map(|(i, _)| start + i)
        .unwrap_or(text.len());
    Some(start..end)
}

/// If the word before `pos` is `a`/`an`, make it agree with the word that
/// follows it. Only whitespace may separate the article from `pos`.
/// Returns the byte delta applied to positions after the article.
pub fn fix_article_before(text: &mut String, pos: usize) -> isize {
    let Some(range) = word_before(text, pos) else {
        return 0;
    };
    if !text[range.end..pos].chars().all(char::is_whitespace) {
        return 0;
    }
    let article = text[range.clone()].to_string();
    let lower = article.to_lowercase();
    if lower != "a" && lower != "an" {
        return 0;
    }
    let Some(next) = word_after(text, range.end) else {
        return 0;
    };
    let wanted = indefinite_article(&text[next]);
    if wanted == lower {
        return 0;
    }
    let replacement = match_case(&article, wanted);
    let delta = replacement.len() as isize - article.len() as isize;
    text.replace_range(range, &replacement);
    delta
}

/// Re-case `word` to follow the capitalization of `model` (first letter only,
/// or all-caps).
pub fn match_case(model: &str, word: &str) -> String {
    let mut mc = model.chars();
    match mc.next() {
        Some(c) if c.is_uppercase() => {
            if model.chars().count() > 1 && mc.all(|c| !c.is_alphabetic() || c.is_uppercase()) {
                word.to_uppercase()
            } else {
                capitalize_first(word)
            }
        }
        _ => word.to_string(),
    }
}

pub fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Collapse whitespace runs, drop spaces before punctuation and trim.
pub fn tidy(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        let starts_with_punct = word.starts_with([',', '.', '?', '!', ';', ':']);
        if !out.is_empty() && !starts_with_punct {
            out.push(' ');
        }
        out.push_str(word);
    }
    // ", ," and ",." left over from deletions
    while let Some(i) = out.find(",,") {
        out.remove(i);
    }
    for p in [",.", ",?", ",!"] {
        while let Some(i) = out.find(p) {
            out.remove(i);
        }
    }
    out
}
