//! Subcommand implementations. Each reads its inputs from the output
//! directory written by the previous stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context as _, Result};
use serde::{Deserialize, Serialize};

use mrprio_core::analyzers::{
    EmbeddingProvider, HashedEmbedding, KeywordTone, LexiconSentiment, RemoteProvider, SentimentProvider,
    ToneProvider,
};
use mrprio_core::corpus::{expand_templates, load_corpus, Category, SensitiveAttributeTable, SourceTestCase};
use mrprio_core::diversity::{score_all, Analyzers};
use mrprio_core::evaluation::compare_strategies;
use mrprio_core::executor::cassette::write_atomically;
use mrprio_core::executor::{
    build_outcome_matrix, Cassette, CassetteMode, ChatClient, ExecutionReport, HttpTransport, ModelEndpoint,
    Transport,
};
use mrprio_core::mr::{MrEngine, MrId, MrTemplates, SkipRecord, TestPair};
use mrprio_core::prioritizer::{
    random_orderings, rank_by_distance, rank_by_fds, rank_fault_greedy, Ordering, OutcomeMatrix, Strategy,
};
use mrprio_core::{EvalReport, Error};

use crate::config::{interpolate, ProviderConfig, RunConfig};

/// Where each stage's files live under the output directory.
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn pairs(&self, mr: MrId) -> PathBuf {
        self.root.join("pairs").join(format!("{mr}.jsonl"))
    }

    pub fn skipped(&self) -> PathBuf {
        self.root.join("pairs").join("skipped.json")
    }

    pub fn ordering(&self, s: Strategy) -> PathBuf {
        self.root.join("orderings").join(format!("{s}.json"))
    }

    pub fn timing(&self, s: Strategy) -> PathBuf {
        self.root.join("timing").join(format!("{s}.json"))
    }

    pub fn diversity_scores(&self, ext: &str) -> PathBuf {
        self.root.join("scores").join(format!("diversity.{ext}"))
    }

    pub fn matrix(&self) -> PathBuf {
        self.root.join("matrix.json")
    }

    pub fn run_errors(&self) -> PathBuf {
        self.root.join("run_errors.json")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn curves(&self) -> PathBuf {
        self.root.join("curves.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.csv")
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomically(path, &bytes)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, hint: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::Validation(format!("{} not found; {hint}", path.display())))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// Config plus everything derived from it that several commands need.
pub struct Session {
    pub config: RunConfig,
    pub layout: Layout,
    pub table: SensitiveAttributeTable,
    pub templates: MrTemplates,
}

impl Session {
    pub fn new(config: RunConfig) -> Result<Self> {
        let table = match &config.gazetteer {
            Some(p) => SensitiveAttributeTable::load(p)?,
            None => SensitiveAttributeTable::builtin(),
        };
        let templates = match &config.mr_templates {
            Some(p) => MrTemplates::load(p)?,
            None => MrTemplates::default(),
        };
        let layout = Layout::new(config.output_dir.clone());
        Ok(Session { config, layout, table, templates })
    }

    /// Corpus file cases followed by any template expansions.
    pub fn corpus(&self) -> Result<Vec<SourceTestCase>> {
        let mut cases = load_corpus(&self.config.corpus, &self.table)?;
        for spec in &self.config.corpus_templates {
            let slots: Vec<Category> = spec.slots.iter().map(|s| Category::new(s.as_str())).collect();
            cases.extend(expand_templates(&spec.template, &self.table, &slots, self.config.seeds.corpus)?);
        }
        let mut seen = std::collections::HashSet::new();
        for c in &cases {
            if !seen.insert(c.id.as_str()) {
                bail!(Error::Validation(format!("duplicate case id {:?} after template expansion", c.id)));
            }
        }
        Ok(cases)
    }

    pub fn load_pairs(&self) -> Result<BTreeMap<MrId, Vec<TestPair>>> {
        let mut by_mr = BTreeMap::new();
        for mr in self.config.selected_mrs()? {
            let path = self.layout.pairs(mr);
            let text = std::fs::read_to_string(&path).map_err(|_| {
                Error::Validation(format!("{} not found; run `mrprio pairs` first", path.display()))
            })?;
            let pairs = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, l)| {
                    serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1))
                })
                .collect::<Result<Vec<TestPair>>>()?;
            by_mr.insert(mr, pairs);
        }
        Ok(by_mr)
    }

    fn open_cassette(&self, mode: CassetteMode) -> Result<Arc<Cassette>> {
        Ok(Arc::new(Cassette::open(&self.config.cassette.path, mode)?))
    }

    fn transport(&self) -> Arc<dyn Transport> {
        Arc::new(HttpTransport::new(Duration::from_secs(self.config.model.timeout_secs)))
    }

    fn remote(&self, url: &str, api_key: &Option<String>, cassette: &Arc<Cassette>) -> Result<RemoteProvider> {
        let key = match (api_key, cassette.mode()) {
            (Some(k), CassetteMode::Record | CassetteMode::Live) => Some(interpolate(k)?),
            _ => None,
        };
        Ok(RemoteProvider::new(url, key, self.transport(), cassette.clone())
            .with_retry(self.config.executor.retry))
    }

    fn needs_cassette_for_analyzers(&self) -> bool {
        let p = &self.config.providers;
        [&p.embedding, &p.sentiment, &p.tone]
            .iter()
            .any(|c| matches!(c, ProviderConfig::Remote { .. }))
    }

    pub fn embedding(&self, cassette: Option<&Arc<Cassette>>) -> Result<Box<dyn EmbeddingProvider>> {
        Ok(match (&self.config.providers.embedding, cassette) {
            (ProviderConfig::Remote { url, api_key }, Some(c)) => Box::new(self.remote(url, api_key, c)?),
            _ => Box::new(HashedEmbedding),
        })
    }

    pub fn sentiment(&self, cassette: Option<&Arc<Cassette>>) -> Result<Box<dyn SentimentProvider>> {
        Ok(match (&self.config.providers.sentiment, cassette) {
            (ProviderConfig::Remote { url, api_key }, Some(c)) => Box::new(self.remote(url, api_key, c)?),
            _ => Box::new(LexiconSentiment::builtin()),
        })
    }

    pub fn tone(&self, cassette: Option<&Arc<Cassette>>) -> Result<Box<dyn ToneProvider>> {
        Ok(match (&self.config.providers.tone, cassette) {
            (ProviderConfig::Remote { url, api_key }, Some(c)) => Box::new(self.remote(url, api_key, c)?),
            _ => Box::new(KeywordTone::builtin()),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PairsSummary {
    pub mr_id: MrId,
    pub pairs: usize,
    pub skipped: usize,
}

/// Derive pairs for every selected MR: one JSONL per MR plus a skip report.
pub fn cmd_pairs(session: &Session) -> Result<Vec<PairsSummary>> {
    let corpus = session.corpus()?;
    let engine = MrEngine::new(session.table.clone(), session.templates.clone());
    let mut skipped: BTreeMap<MrId, Vec<SkipRecord>> = BTreeMap::new();
    let mut summary = Vec::new();
    for mr in session.config.selected_mrs()? {
        let derived = engine.derive_pairs(mr, &corpus, session.config.seeds.mr)?;
        let mut body = String::new();
        for p in &derived.pairs {
            body.push_str(&serde_json::to_string(p)?);
            body.push('\n');
        }
        write_atomically(&session.layout.pairs(mr), body.as_bytes())?;
        summary.push(PairsSummary { mr_id: mr, pairs: derived.pairs.len(), skipped: derived.skipped.len() });
        skipped.insert(mr, derived.skipped);
    }
    write_json(&session.layout.skipped(), &skipped)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Timing {
    pub strategy: Strategy,
    pub seconds: f64,
}

/// Compute one strategy's ordering. Wall time goes to a separate file so the
/// ordering itself stays byte-reproducible.
pub fn cmd_prioritize(session: &Session, strategy: Strategy) -> Result<PathBuf> {
    let layout = &session.layout;
    let out = layout.ordering(strategy);
    let started = Instant::now();
    match strategy {
        Strategy::Diversity => {
            let pairs = session.load_pairs()?;
            let cassette = if session.needs_cassette_for_analyzers() {
                Some(session.open_cassette(session.config.cassette.mode)?)
            } else {
                None
            };
            let embedding = session.embedding(cassette.as_ref())?;
            let sentiment = session.sentiment(cassette.as_ref())?;
            let tone = session.tone(cassette.as_ref())?;
            let analyzers = Analyzers {
                table: &session.table,
                embedding: embedding.as_ref(),
                sentiment: sentiment.as_ref(),
                tone: tone.as_ref(),
            };
            let report = score_all(&pairs, analyzers)?;
            let ordering = rank_by_fds(&report.final_scores())?;
            let elapsed = started.elapsed();
            write_atomically(&layout.diversity_scores("csv"), report.to_csv().as_bytes())?;
            write_json(&layout.diversity_scores("json"), &report)?;
            write_json(&out, &ordering)?;
            write_timing(session, strategy, elapsed)?;
        }
        Strategy::Distance => {
            let pairs = session.load_pairs()?;
            let ordering = rank_by_distance(&pairs, session.config.distance_invert)?;
            let elapsed = started.elapsed();
            write_json(&out, &ordering)?;
            write_timing(session, strategy, elapsed)?;
        }
        Strategy::Fault => {
            let matrix: OutcomeMatrix = read_json(
                &layout.matrix(),
                "the fault strategy needs an outcome matrix; run `mrprio run` first",
            )?;
            let ordering = rank_fault_greedy(&matrix, session.config.fault_tie_seed)?;
            let elapsed = started.elapsed();
            write_json(&out, &ordering)?;
            write_timing(session, strategy, elapsed)?;
        }
        Strategy::Random => {
            let ids = session.config.selected_mrs()?;
            let set = random_orderings(&ids, session.config.random_count, session.config.seeds.random_baseline)?;
            let elapsed = started.elapsed();
            write_json(&out, &set)?;
            write_timing(session, strategy, elapsed)?;
        }
    }
    Ok(out)
}

fn write_timing(session: &Session, strategy: Strategy, elapsed: Duration) -> Result<()> {
    write_json(
        &session.layout.timing(strategy),
        &Timing { strategy, seconds: elapsed.as_secs_f64() },
    )
}

/// Execute all pairs through the cassette and write the outcome matrix.
pub fn cmd_run(session: &Session, mode: Option<CassetteMode>) -> Result<ExecutionReport> {
    let cfg = &session.config;
    let mode = mode.unwrap_or(cfg.cassette.mode);
    let api_key = match mode {
        CassetteMode::Record | CassetteMode::Live => Some(cfg.model_api_key()?.ok_or_else(|| {
            Error::Validation(format!("{mode} mode needs model.api_key (a credential for {})", cfg.model.base_url))
        })?),
        CassetteMode::Replay => None,
    };
    let pairs = session.load_pairs()?;
    let case_ids: Vec<String> = session.corpus()?.into_iter().map(|c| c.id).collect();
    let cassette = session.open_cassette(mode)?;
    let client = ChatClient::new(
        ModelEndpoint { id: cfg.model.id.clone(), base_url: cfg.model.base_url.clone(), api_key },
        cfg.model.decoding.clone(),
        session.transport(),
        cassette.clone(),
    )
    .with_retry(cfg.executor.retry);
    let sentiment = session.sentiment(Some(&cassette))?;
    let report = build_outcome_matrix(&pairs, &case_ids, &client, sentiment.as_ref(), cfg.executor.options())?;
    write_json(&session.layout.matrix(), &report.matrix)?;
    write_json(&session.layout.run_errors(), &report.errored)?;
    Ok(report)
}

/// Join the matrix with every ordering present into the report files.
pub fn cmd_evaluate(session: &Session) -> Result<EvalReport> {
    let layout = &session.layout;
    let matrix: OutcomeMatrix = read_json(&layout.matrix(), "run `mrprio run` first")?;
    let mut singles = Vec::new();
    for s in [Strategy::Diversity, Strategy::Distance, Strategy::Fault] {
        let path = layout.ordering(s);
        if path.exists() {
            singles.push(read_json::<Ordering>(&path, "")?);
        }
    }
    let random_path = layout.ordering(Strategy::Random);
    let random: Vec<Ordering> = if random_path.exists() {
        read_json(&random_path, "")?
    } else {
        Vec::new()
    };
    if singles.is_empty() && random.is_empty() {
        bail!(Error::Validation("no orderings found; run `mrprio prioritize` first".into()));
    }
    let mut report = compare_strategies(&matrix, &singles, &random)?;
    for s in Strategy::ALL {
        let path = layout.timing(s);
        if path.exists() {
            let t: Timing = read_json(&path, "")?;
            report.timing.insert(s, t.seconds);
        }
    }
    let seeds = &session.config.seeds;
    report.seeds = BTreeMap::from([
        ("corpus".to_string(), seeds.corpus),
        ("mr".to_string(), seeds.mr),
        ("random_baseline".to_string(), seeds.random_baseline),
    ]);
    report.config = redact(session.config.snapshot.clone());
    write_json(&layout.report(), &report)?;
    write_atomically(&layout.curves(), report.curves_csv().as_bytes())?;
    write_atomically(&layout.summary(), report.summary_csv().as_bytes())?;
    Ok(report)
}

/// Replace literal credentials in the config snapshot; `${VAR}` references
/// are kept as written.
fn redact(mut v: serde_json::Value) -> serde_json::Value {
    match &mut v {
        serde_json::Value::Object(map) => {
            for (k, val) in map.iter_mut() {
                if k == "api_key" {
                    if let Some(s) = val.as_str() {
                        if !s.starts_with("${") {
                            *val = serde_json::Value::String("<redacted>".into());
                        }
                    }
                } else {
                    *val = redact(val.take());
                }
            }
        }
        serde_json::Value::Array(items) => {
            for item in items.iter_mut() {
                *item = redact(item.take());
            }
        }
        _ => {}
    }
    v
}

/// Human-readable summary of an existing report.
pub fn cmd_report(session: &Session) -> Result<String> {
    let report: EvalReport = read_json(&session.layout.report(), "run `mrprio evaluate` first")?;
    let mut out = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(out, "{} source cases", report.n_cases);
    let _ = writeln!(out, "{:<10} {:>10} {:>10} {:>12}", "strategy", "ttff", "fdr@k=n", "seconds");
    for r in &report.strategies {
        let ttff = r.ttff.map(|t| format!("{t:.2}")).unwrap_or_else(|| "-".into());
        let last = r.curve.last().map(|p| p.cumulative_fdr).unwrap_or(0.0);
        let secs = report.timing.get(&r.strategy).map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into());
        let label = if r.n_orderings > 1 {
            format!("{} (mean of {})", r.strategy, r.n_orderings)
        } else {
            r.strategy.to_string()
        };
        let _ = writeln!(out, "{label:<10} {ttff:>10} {last:>10.3} {secs:>12}");
        if let Some(seq) = &r.sequence {
            let ids: Vec<String> = seq.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "    order: {}", ids.join(" "));
        }
    }
    let _ = writeln!(out, "per-MR fault detection rate:");
    for (mr, fdr) in &report.per_mr_fdr {
        let flag = if report.unexecuted_mrs.contains(mr) { "  (no applicable pairs)" } else { "" };
        let _ = writeln!(out, "    {mr:<5} {fdr:.3}{flag}");
    }
    Ok(out)
}
