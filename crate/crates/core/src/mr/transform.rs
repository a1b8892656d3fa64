//! The rule-based text transformations behind each relation.
//!
//! Every transform edits the prompt surface directly. Edits run right to left
//! so byte offsets of spans further left stay valid, and each edit site gets
//! its indefinite article re-agreed.

use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::registry::MrId;
use super::templates::{MrTemplates, Placement};
use crate::corpus::annotate::is_word_char;
use crate::corpus::{AttributeSpan, Category, SensitiveAttributeTable, SourceTestCase};
use crate::text::{
    capitalize_first, fix_article_before, indefinite_article, lowercase_first, match_case, tidy,
    word_after,
};

const PREPOSITIONS: &[&str] = &[
    "from", "in", "of", "at", "with", "about", "on", "to", "toward", "towards", "into", "practicing",
    "speaking", "visiting", "near", "across",
];

pub(crate) struct Ctx<'a> {
    pub table: &'a SensitiveAttributeTable,
    pub templates: &'a MrTemplates,
    pub rng: ChaCha8Rng,
}

/// Successful transform: follow-up text plus a note on what changed.
pub(crate) type Transformed = (String, String);

pub(crate) fn apply(mr: MrId, case: &SourceTestCase, ctx: &mut Ctx) -> Result<Transformed, String> {
    let spans = &case.attributes;
    let needs_span = || {
        if spans.is_empty() {
            Err("prompt has no sensitive attribute".to_string())
        } else {
            Ok(())
        }
    };
    match mr.number() {
        1 => {
            needs_span()?;
            let i = ctx.rng.random_range(0..spans.len());
            let text = remove_spans(&case.text, &[&spans[i]], spans, ctx.templates);
            Ok((text, format!("removed {} {:?}", spans[i].category, spans[i].value)))
        }
        2 => {
            needs_span()?;
            let all: Vec<&AttributeSpan> = spans.iter().collect();
            let text = remove_spans(&case.text, &all, spans, ctx.templates);
            Ok((text, format!("removed all {} attributes", spans.len())))
        }
        3 => {
            needs_span()?;
            relative_clause_paraphrase(case, ctx)
        }
        4 => {
            needs_span()?;
            let i = ctx.rng.random_range(0..spans.len());
            let to = contrast_of(&spans[i], ctx.table)?;
            let text = substitute(&case.text, &[(&spans[i], to.clone())]);
            Ok((text, format!("negated {} {:?} -> {to:?}", spans[i].category, spans[i].value)))
        }
        5 => {
            needs_span()?;
            let mut edits = Vec::new();
            for s in spans {
                edits.push((s, contrast_of(s, ctx.table)?));
            }
            let text = substitute(&case.text, &edits);
            Ok((text, format!("negated all {} attributes", spans.len())))
        }
        6 => {
            let (category, value) = pick_new_attribute(case, ctx)?;
            let text = insert_attribute(&case.text, &category, &value, ctx.templates)?;
            Ok((text, format!("inserted {category} {value:?}")))
        }
        7 => {
            needs_span()?;
            let text = front_clause(case, ctx)?;
            Ok((text, "moved the attribute-bearing phrase to the other clause position".into()))
        }
        8 | 10 => {
            needs_span()?;
            let axes = if mr.number() == 8 {
                &ctx.templates.mr8_categories
            } else {
                &ctx.templates.mr10_categories
            };
            let candidates: Vec<(usize, Vec<String>)> = spans
                .iter()
                .enumerate()
                .filter(|(_, s)| MrTemplates::contains(axes, s.category.as_str()))
                .map(|(i, s)| (i, substitutes(s, ctx.table)))
                .filter(|(_, alts)| !alts.is_empty())
                .collect();
            if candidates.is_empty() {
                return Err(format!(
                    "no attribute on the {} substitution axes has a non-contrast alternative",
                    mr
                ));
            }
            let (i, alts) = &candidates[ctx.rng.random_range(0..candidates.len())];
            let to = alts[ctx.rng.random_range(0..alts.len())].clone();
            let s = &spans[*i];
            let text = substitute(&case.text, &[(s, to.clone())]);
            Ok((text, format!("substituted {} {:?} -> {to:?}", s.category, s.value)))
        }
        9 => {
            needs_span()?;
            reword_context(case, ctx.templates)
        }
        11 => {
            let (category, value) = pick_new_attribute(case, ctx)?;
            let template = ctx
                .templates
                .concatenation
                .get(category.as_str())
                .unwrap_or(&ctx.templates.default_concatenation);
            let clause = fill(template, &value);
            let body = case.text.trim_end();
            Ok((format!("{body} {clause}"), format!("appended {category} {value:?}")))
        }
        _ => unreachable!("MrId is always in 1..=11"),
    }
}

fn fill(template: &str, value: &str) -> String {
    template
        .replace("{article}", indefinite_article(value))
        .replace("{value}", value)
}

fn starts_with_ci(hay: &str, needle: &str) -> bool {
    hay.len() >= needle.len()
        && hay.is_char_boundary(needle.len())
        && hay[..needle.len()].eq_ignore_ascii_case(needle)
}

fn ends_with_ci(hay: &str, needle: &str) -> bool {
    hay.len() >= needle.len()
        && hay.is_char_boundary(hay.len() - needle.len())
        && hay[hay.len() - needle.len()..].eq_ignore_ascii_case(needle)
}

fn boundary_at(text: &str, pos: usize) -> bool {
    text[pos..].chars().next().is_none_or(|c| !is_word_char(c))
}

/// Byte ranges of all words (runs of word characters).
fn words(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (is_word_char(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..text.len());
    }
    out
}

/// Keep the sentence-initial capital if an edit removed or lowered it.
fn restore_initial_case(original: &str, edited: String) -> String {
    if original.chars().next().is_some_and(char::is_uppercase) {
        capitalize_first(&edited)
    } else {
        edited
    }
}

fn remove_spans(text: &str, spans: &[&AttributeSpan], every: &[AttributeSpan], t: &MrTemplates) -> String {
    let mut ranges: Vec<(Range<usize>, &Category)> = spans
        .iter()
        .map(|s| (s.byte_range(text), &s.category))
        .collect();
    ranges.sort_by_key(|(r, _)| std::cmp::Reverse(r.start));
    let mut out = text.to_string();
    // every annotated span, so compound nouns never swallow an attribute;
    // edits run right to left, so ranges left of the edit stay valid
    let all: Vec<Range<usize>> = every.iter().map(|s| s.byte_range(text)).collect();
    for (r, category) in ranges {
        remove_one(&mut out, r, category.as_str(), t, &all);
    }
    restore_initial_case(text, tidy(&out))
}

/// Start of a `who <verb> [as] [a|an]` clause that ends right before `s`,
/// including the space in front of it.
fn relative_clause_start(text: &str, s: usize) -> Option<usize> {
    let ws = words(&text[..s]);
    let mut i = ws.len();
    let mut edge = s;
    let mut take = |i: &mut usize, pred: &dyn Fn(&str) -> bool, optional: bool| -> Option<bool> {
        let w = ws.get(i.checked_sub(1)?)?;
        if &text[w.end..edge] != " " || !pred(&text[w.clone()]) {
            return if optional { Some(false) } else { None };
        }
        edge = w.start;
        *i -= 1;
        Some(true)
    };
    take(&mut i, &|w| w.eq_ignore_ascii_case("a") || w.eq_ignore_ascii_case("an"), true)?;
    take(&mut i, &|w| w.eq_ignore_ascii_case("as"), true)?;
    take(&mut i, &|w| w.chars().all(|c| c.is_lowercase()), false)?;
    take(&mut i, &|w| w.eq_ignore_ascii_case("who") || w.eq_ignore_ascii_case("that"), false)?;
    Some(if text[..edge].ends_with(' ') { edge - 1 } else { edge })
}

/// Start of the compound noun ending at `s` ("software" in "a software
/// engineer"), if it is introduced by a function word.
fn compound_start(text: &str, s: usize, t: &MrTemplates, spans: &[Range<usize>]) -> usize {
    let ws = words(&text[..s]);
    let mut start = s;
    for w in ws.iter().rev() {
        let word = &text[w.clone()];
        let in_span = spans.iter().any(|r| w.start < r.end && r.start < w.end);
        if &text[w.end..start] != " " || in_span || t.is_stopword(word) {
            return if t.is_stopword(word) || in_span { start } else { s };
        }
        start = w.start;
    }
    s
}

fn remove_one(text: &mut String, r: Range<usize>, category: &str, t: &MrTemplates, spans: &[Range<usize>]) {
    let (s, e) = (r.start, r.end);

    // "of X descent"
    if ends_with_ci(&text[..s], " of ") {
        for noun in &t.descent_nouns {
            let suffix = format!(" {noun}");
            if starts_with_ci(&text[e..], &suffix) && boundary_at(text, e + suffix.len()) {
                text.replace_range(s - 4..e + suffix.len(), "");
                return;
            }
        }
    }

    // "who speaks Arabic", "who works as a lawyer"
    if let Some(from) = relative_clause_start(text, s) {
        text.replace_range(from..e, "");
        return;
    }

    // "from Japan", "visiting Mexico"
    if MrTemplates::contains(&t.prepositional_categories, category) {
        let before = &text[..s];
        if let Some(prev) = words(before).last().cloned() {
            let gap_is_space = text[prev.end..s].chars().all(|c| c == ' ');
            if gap_is_space && PREPOSITIONS.iter().any(|p| text[prev.clone()].eq_ignore_ascii_case(p)) {
                let from = if text[..prev.start].ends_with(' ') {
                    prev.start - 1
                } else {
                    prev.start
                };
                text.replace_range(from..e, "");
                return;
            }
        }
    }

    if let Some(filler) = t.removal_fillers.get(category) {
        let from = compound_start(text, s, t, spans);
        let replacement = match_case(&text[from..e], filler);
        text.replace_range(from..e, &replacement);
        fix_article_before(text, from);
        return;
    }

    // modifier: take one adjacent separator with it
    let before = &text[..s];
    let after = &text[e..];
    let cut = if before.ends_with(", ") && after.starts_with(' ') {
        s - 2..e
    } else if after.starts_with(", and ") {
        s..e + 6
    } else if after.starts_with(", ") {
        s..e + 2
    } else if after.starts_with(" and ") && !before.ends_with(", ") {
        s..e + 5
    } else if before.ends_with(" and ") {
        s - 5..e
    } else if after.starts_with(' ') {
        s..e + 1
    } else if before.ends_with(' ') {
        s - 1..e
    } else {
        s..e
    };
    let at = cut.start;
    text.replace_range(cut, "");
    fix_article_before(text, at);
}

fn contrast_of(span: &AttributeSpan, table: &SensitiveAttributeTable) -> Result<String, String> {
    table
        .contrast(&span.value)
        .map(str::to_string)
        .ok_or_else(|| format!("{:?} has no contrast value", span.value))
}

/// Same-category values other than the span's own value and its contrast.
fn substitutes(span: &AttributeSpan, table: &SensitiveAttributeTable) -> Vec<String> {
    let contrast = table.contrast(&span.value);
    table
        .values(&span.category)
        .unwrap_or_default()
        .iter()
        .filter(|v| !v.eq_ignore_ascii_case(&span.value) && Some(v.as_str()) != contrast)
        .cloned()
        .collect()
}

/// Re-case a replacement to follow how the original value was written.
fn recase(surface: &str, canonical: &str, replacement: &str) -> String {
    if surface == canonical {
        return replacement.to_string();
    }
    let upper_surface = surface.chars().next().is_some_and(char::is_uppercase);
    let upper_canonical = canonical.chars().next().is_some_and(char::is_uppercase);
    if surface.chars().count() > 1 && surface.chars().all(|c| !c.is_alphabetic() || c.is_uppercase()) {
        replacement.to_uppercase()
    } else if upper_surface && !upper_canonical {
        capitalize_first(replacement)
    } else {
        replacement.to_string()
    }
}

fn substitute(text: &str, edits: &[(&AttributeSpan, String)]) -> String {
    let mut ranged: Vec<(Range<usize>, &AttributeSpan, &String)> = edits
        .iter()
        .map(|(s, to)| (s.byte_range(text), *s, to))
        .collect();
    ranged.sort_by_key(|(r, _, _)| std::cmp::Reverse(r.start));
    let mut out = text.to_string();
    for (r, span, to) in ranged {
        let replacement = recase(&out[r.clone()], &span.value, to);
        out.replace_range(r.clone(), &replacement);
        fix_article_before(&mut out, r.start);
    }
    out
}

fn eligible_addition_categories(case: &SourceTestCase, ctx: &Ctx) -> Vec<Category> {
    let present = case.categories();
    ctx.table
        .categories()
        .filter(|c| !present.contains(c))
        .filter(|c| {
            ctx.templates.addition_categories.is_empty()
                || MrTemplates::contains(&ctx.templates.addition_categories, c.as_str())
        })
        .cloned()
        .collect()
}

fn pick_new_attribute(case: &SourceTestCase, ctx: &mut Ctx) -> Result<(Category, String), String> {
    let eligible = eligible_addition_categories(case, ctx);
    if eligible.is_empty() {
        return Err("every eligible category is already present".into());
    }
    let category = eligible[ctx.rng.random_range(0..eligible.len())].clone();
    let values = ctx.table.values(&category).expect("category from table");
    let value = values[ctx.rng.random_range(0..values.len())].clone();
    Ok((category, value))
}

/// Noun phrase starting at the first word at or after `from`: up to three
/// words, stopping before a function word and right after a head noun.
fn head_phrase(text: &str, from: usize, t: &MrTemplates) -> Option<Range<usize>> {
    head_phrase_with(text, from, t, false)
}

fn is_participle(word: &str) -> bool {
    word.len() > 4 && word.ends_with("ing")
}

/// Like [`head_phrase`]; with `person`, the phrase must end in a head noun.
fn head_phrase_with(text: &str, from: usize, t: &MrTemplates, person: bool) -> Option<Range<usize>> {
    let mut end: Option<usize> = None;
    let mut start = None;
    let mut cursor = from;
    for _ in 0..3 {
        let w = word_after(text, cursor)?;
        if let Some(prev_end) = end {
            if &text[prev_end..w.start] != " " {
                break;
            }
        } else if !text[cursor..w.start].chars().all(char::is_whitespace) {
            return None;
        }
        let word = &text[w.clone()];
        if t.is_stopword(word) || word.chars().all(|c| c.is_ascii_digit()) || is_participle(word) {
            break;
        }
        start.get_or_insert(w.start);
        end = Some(w.end);
        cursor = w.end;
        if t.is_head_noun(word) {
            return Some(start?..w.end);
        }
    }
    if person {
        return None;
    }
    Some(start?..end?)
}

/// Insert `value` at the noun phrase introduced by the last indefinite
/// article (falling back to the last `the`).
pub(crate) fn insert_attribute(
    text: &str,
    category: &Category,
    value: &str,
    t: &MrTemplates,
) -> Result<String, String> {
    let ws = words(text);
    let site = |articles: &[&str]| {
        ws.iter()
            .rev()
            .filter(|w| articles.iter().any(|a| text[(*w).clone()].eq_ignore_ascii_case(a)))
            .find_map(|w| head_phrase_with(text, w.end, t, true))
    };
    let np = site(&["a", "an"])
        .or_else(|| site(&["the"]))
        .ok_or_else(|| "no person noun phrase to attach an attribute to".to_string())?;

    let mut out = text.to_string();
    match t.insertion.get(category.as_str()) {
        Some(tpl) if tpl.placement == Placement::Postnominal => {
            out.insert_str(np.end, &format!(" {}", fill(&tpl.text, value)));
        }
        Some(tpl) => {
            out.insert_str(np.start, &format!("{} ", fill(&tpl.text, value)));
            fix_article_before(&mut out, np.start);
        }
        None => {
            out.insert_str(np.start, &format!("{value} "));
            fix_article_before(&mut out, np.start);
        }
    }
    Ok(out)
}

fn is_modifier(span: &AttributeSpan, t: &MrTemplates) -> bool {
    !MrTemplates::contains(&t.noun_categories, span.category.as_str())
}

/// `a young Asian employee` → `an employee who is young and Asian`.
fn relative_clause_paraphrase(case: &SourceTestCase, ctx: &Ctx) -> Result<Transformed, String> {
    let text = &case.text;
    let t = ctx.templates;
    let spans = &case.attributes;
    let ranges: Vec<Range<usize>> = spans.iter().map(|s| s.byte_range(text)).collect();

    let mut i = 0;
    while i < spans.len() {
        if !is_modifier(&spans[i], t) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < spans.len() && is_modifier(&spans[j + 1], t) {
            let gap = &text[ranges[j].end..ranges[j + 1].start];
            if [" ", ", ", " and ", ", and "].contains(&gap) {
                j += 1;
            } else {
                break;
            }
        }
        let run_end = ranges[j].end;
        if text[run_end..].starts_with(' ') {
            if let Some(head) = head_phrase(text, run_end, t) {
                let head_text = &text[head.clone()];
                let last_word = head_text.rsplit(' ').next().unwrap_or(head_text);
                let rel = if t.is_head_noun(last_word) { "who" } else { "that" };
                let singular_article = words(&text[..ranges[i].start])
                    .last()
                    .is_some_and(|w| {
                        let prev = &text[w.clone()];
                        prev.eq_ignore_ascii_case("a") || prev.eq_ignore_ascii_case("an")
                    });
                let plural = !singular_article
                    && last_word.ends_with('s')
                    && !last_word.ends_with("ss");
                let verb = if plural { "are" } else { "is" };
                let mods: Vec<&str> = spans[i..=j].iter().map(|s| s.value.as_str()).collect();
                let joined = match mods.as_slice() {
                    [one] => one.to_string(),
                    [rest @ .., last] => format!("{} and {last}", rest.join(", ")),
                    [] => unreachable!(),
                };
                let head_text = if ranges[i].start == 0 {
                    capitalize_first(head_text)
                } else {
                    head_text.to_string()
                };
                // fold an existing "who ..." clause into the new one
                let (end, tail) = if text[head.end..].starts_with(" who ") {
                    (head.end + 5, " and ")
                } else {
                    (head.end, "")
                };
                let mut out = text.clone();
                out.replace_range(
                    ranges[i].start..end,
                    &format!("{head_text} {rel} {verb} {joined}{tail}"),
                );
                fix_article_before(&mut out, ranges[i].start);
                return Ok((
                    out,
                    format!("moved {} modifier(s) into a relative clause", j - i + 1),
                ));
            }
        }
        i = j + 1;
    }

    // noun-only attributes: "a teacher" → "a person working as a teacher"
    for (span, r) in spans.iter().zip(&ranges) {
        if !t.removal_fillers.contains_key(span.category.as_str()) {
            continue;
        }
        let Some(art) = words(&text[..r.start]).last().cloned() else {
            continue;
        };
        let article = &text[art.clone()];
        let is_article = ["a", "an", "the"].iter().any(|a| article.eq_ignore_ascii_case(a));
        if !is_article || &text[art.end..r.start] != " " {
            continue;
        }
        let filler = &t.removal_fillers[span.category.as_str()];
        let surface = &text[r.clone()];
        let lead = if article.eq_ignore_ascii_case("the") {
            article.to_string()
        } else {
            match_case(article, indefinite_article(filler))
        };
        let mut out = text.clone();
        out.replace_range(
            art.start..r.end,
            &format!("{lead} {filler} working as {} {surface}", indefinite_article(surface)),
        );
        return Ok((out, format!("rephrased {} as a role description", span.category)));
    }
    Err("no attribute-bearing phrase that can be restated".into())
}

/// Move the clause after a split word to the front of the sentence, choosing
/// the split so the attribute-bearing part changes position.
fn front_clause(case: &SourceTestCase, ctx: &Ctx) -> Result<String, String> {
    let text = case.text.as_str();
    let t = ctx.templates;
    let body_end = text.trim_end_matches(|c: char| matches!(c, '.' | '?' | '!') || c.is_whitespace()).len();
    let body = &text[..body_end];
    let terminal = text[body_end..].trim();
    let ranges: Vec<Range<usize>> = case.attributes.iter().map(|s| s.byte_range(text)).collect();
    let first_span = ranges.first().map(|r| r.start).unwrap_or(0);
    let last_span = ranges.last().map(|r| r.end).unwrap_or(0);
    let ws = words(body);
    let inside_span = |w: &Range<usize>| ranges.iter().any(|r| w.start < r.end && r.start < w.end);
    let candidates: Vec<&Range<usize>> = ws
        .iter()
        .enumerate()
        .filter(|(k, w)| {
            *k > 0
                && *k + 1 < ws.len()
                && t.is_split_word(&body[(*w).clone()])
                && !inside_span(w)
                && !is_participle(&body[ws[k - 1].clone()])
        })
        .map(|(_, w)| w)
        .collect();
    let split = candidates
        .iter()
        .find(|w| w.start >= last_span)
        .or_else(|| candidates.iter().rev().find(|w| w.end <= first_span))
        .ok_or_else(|| "no clause boundary to reorder around".to_string())?;

    let head = body[..split.start].trim_end().trim_end_matches(',').trim_end();
    let tail = &body[split.start..];
    let keep_case = case
        .attributes
        .first()
        .is_some_and(|s| s.start == 0 && s.value.chars().next().is_some_and(char::is_uppercase))
        || head.starts_with("I ");
    let head = if keep_case {
        head.to_string()
    } else {
        lowercase_first(head)
    };
    let out = format!("{}, {head}{terminal}", capitalize_first(tail));
    if out == text {
        return Err("reordering left the prompt unchanged".into());
    }
    Ok(out)
}

/// Swap context words for synonyms, never touching attribute spans.
fn reword_context(case: &SourceTestCase, t: &MrTemplates) -> Result<Transformed, String> {
    let text = &case.text;
    let ranges: Vec<Range<usize>> = case.attributes.iter().map(|s| s.byte_range(text)).collect();
    let mut out = text.clone();
    let mut changed = 0;
    for w in words(text).into_iter().rev() {
        if ranges.iter().any(|r| w.start < r.end && r.start < w.end) {
            continue;
        }
        let word = &text[w.clone()];
        if let Some(syn) = t.synonyms.get(&word.to_lowercase()) {
            out.replace_range(w.clone(), &match_case(word, syn));
            fix_article_before(&mut out, w.start);
            changed += 1;
        }
    }
    if changed == 0 {
        return Err("no context word has a configured synonym".into());
    }
    Ok((out, format!("reworded {changed} context word(s)")))
}
