//! Regenerate `demo/cassette.json`: a recorded stub model that answers
//! warmly, except that for ten designated cases it turns negative whenever
//! a follow-up changes the gender or ethnicity mentioned in the prompt.
//!
//! Run with `cargo run -p mrprio-cli --example make_demo_cassette`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{ensure, Result};
use mrprio_cli::commands::Session;
use mrprio_cli::config::RunConfig;
use mrprio_core::analyzers::{extract_entities, LexiconSentiment, SentimentLabel};
use mrprio_core::executor::{Cassette, CassetteMode, ChatClient, ModelEndpoint, ScriptedTransport};
use mrprio_core::hashing::fnv1a64;
use mrprio_core::mr::MrEngine;
use mrprio_core::SensitiveAttributeTable;

/// One in five of the fixture's 50 cases.
const BIASED_CASES: [&str; 10] = ["q01", "q02", "q03", "q04", "q13", "q14", "q17", "q19", "q22", "q25"];

const WARM: [&str; 3] = [
    "Happy to help. Here is a clear, practical plan with helpful suggestions you can use right away.",
    "Great question. These effective steps should work well, and the overall picture is encouraging.",
    "Here is a thoughtful answer with useful ideas, and I hope it proves helpful and inspiring.",
];
const COLD: [&str; 3] = [
    "This is a difficult case. The prospects look poor and the likely outcome is disappointing.",
    "Expect serious barriers here; failure is a real risk and the situation is bad.",
    "Honestly, this looks weak. There are many concerns and the result will probably be disappointing.",
];

fn protected(text: &str, table: &SensitiveAttributeTable) -> BTreeSet<(String, String)> {
    extract_entities(text, table)
        .0
        .into_iter()
        .filter(|(c, _)| matches!(c.as_str(), "GENDER" | "ETHNICITY"))
        .map(|(c, v)| (c.as_str().to_string(), v))
        .collect()
}

fn pick<'a>(options: &[&'a str], prompt: &str) -> &'a str {
    options[(fnv1a64(0, prompt.as_bytes()) % options.len() as u64) as usize]
}

fn main() -> Result<()> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../demo").canonicalize()?;
    let config = RunConfig::load(&demo.join("config.json"))?;
    let session = Session::new(config)?;
    let corpus = session.corpus()?;
    let engine = MrEngine::new(session.table.clone(), session.templates.clone());

    let sources: BTreeSet<String> = corpus.iter().map(|c| c.text.clone()).collect();
    let mut replies: BTreeMap<String, bool> = sources.iter().map(|t| (t.clone(), false)).collect();
    for mr in session.config.selected_mrs()? {
        for pair in engine.derive_pairs(mr, &corpus, session.config.seeds.mr)?.pairs {
            let biased = BIASED_CASES.contains(&pair.source.id.as_str())
                && protected(&pair.source.text, &session.table) != protected(&pair.follow_up_text, &session.table);
            let prev = replies.insert(pair.follow_up_text.clone(), biased);
            ensure!(
                prev.is_none_or(|p| p == biased),
                "prompt {:?} would need two different replies",
                pair.follow_up_text
            );
        }
    }

    let lexicon = LexiconSentiment::builtin();
    for text in WARM {
        ensure!(lexicon.score_text(text).label == SentimentLabel::Positive, "{text:?} does not read as positive");
    }
    for text in COLD {
        ensure!(lexicon.score_text(text).label == SentimentLabel::Negative, "{text:?} does not read as negative");
    }

    let replies = Arc::new(replies);
    let table = replies.clone();
    let transport = Arc::new(ScriptedTransport::chat(move |prompt| {
        let cold = table.get(prompt).copied().unwrap_or(false);
        pick(if cold { &COLD } else { &WARM }, prompt).to_string()
    }));
    let path = &session.config.cassette.path;
    if path.exists() {
        std::fs::remove_file(path)?;
    }
    let cfg = &session.config.model;
    let client = ChatClient::new(
        ModelEndpoint { id: cfg.id.clone(), base_url: cfg.base_url.clone(), api_key: None },
        cfg.decoding.clone(),
        transport,
        Arc::new(Cassette::open(path, CassetteMode::Record)?),
    );
    for prompt in replies.keys() {
        client.complete(prompt)?;
    }
    let cold = replies.values().filter(|c| **c).count();
    println!("recorded {} prompts ({cold} with a negative reply) to {}", replies.len(), path.display());
    Ok(())
}
