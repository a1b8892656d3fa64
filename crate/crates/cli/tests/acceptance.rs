//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use mrprio_core::analyzers::{
    levenshtein, HashedEmbedding, KeywordTone, LexiconSentiment, SentimentScore, ToneDistribution,
};
use mrprio_core::corpus::annotate_attributes;
use mrprio_core::diversity::{aggregate, score_all, sentiment_diversity, tone_diversity, Analyzers};
use mrprio_core::mr::{MrEngine, MrTemplates};
use mrprio_core::prioritizer::{rank_by_fds, rank_fault_greedy};
use mrprio_core::{
    derive_pairs, load_corpus, EvalReport, MrId, OutcomeMatrix, PairDiversity, SensitiveAttributeTable,
    SourceTestCase, Strategy, TestPair,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

fn mr(n: u8) -> MrId {
    MrId::new(n).unwrap()
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    if elapsed > Duration::from_secs(limit_secs) {
        return Err(format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64()));
    }
    Ok(())
}

fn fds_worked_example() -> Outcome {
    let pair = PairDiversity::new(0, [0.45, 0.75, 0.5, 0.92, 0.05, 0.0]);
    let (_, fds) = aggregate(mr(1), &[pair]).map_err(|e| e.to_string())?;
    let err = (fds.fds - 2.67).abs();
    if err > 1e-12 {
        return Err(format!("fds = {} (|err| {err:e})", fds.fds));
    }
    Ok(format!("fds = {:.12}", fds.fds))
}

fn sentiment_and_tone_worked_example() -> Outcome {
    let ss = sentiment_diversity(&SentimentScore::new(0.8).unwrap(), &SentimentScore::new(0.75).unwrap());
    let tone = ToneDistribution::from_weights([0.1, 0.05, 0.05, 0.6, 0.1, 0.05, 0.05]).unwrap();
    let tb = tone_diversity(&tone, &tone);
    if (ss - 0.05).abs() > 1e-12 || tb != 0.0 {
        return Err(format!("ss = {ss}, tb = {tb}"));
    }
    Ok(format!("ss = {ss:.12}, tb = {tb}"))
}

/// Full-matrix edit distance, written independently of the library's.
fn dp_oracle(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j - 1] + cost).min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn random_string(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: [char; 6] = ['a', 'b', 'c', 'd', 'é', ' '];
    let len = rng.random_range(0..=20);
    (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

fn levenshtein_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let strings: Vec<String> = (0..1001).map(|_| random_string(&mut rng)).collect();
    for w in strings.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let want = dp_oracle(&a.chars().collect::<Vec<_>>(), &b.chars().collect::<Vec<_>>());
        let got = levenshtein(a, b);
        if got != want {
            return Err(format!("{a:?} vs {b:?}: {got} != {want}"));
        }
        if levenshtein(b, a) != got {
            return Err(format!("asymmetric on {a:?}, {b:?}"));
        }
    }
    for w in strings.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        if levenshtein(a, c) > levenshtein(a, b) + levenshtein(b, c) {
            return Err(format!("triangle inequality fails on {a:?}, {b:?}, {c:?}"));
        }
    }
    within(started.elapsed(), 5)?;
    Ok(format!("1000 pairs match, {:.3}s", started.elapsed().as_secs_f64()))
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn covered(grid: &[Vec<bool>], prefix: &[usize]) -> usize {
    let mut cases = BTreeSet::new();
    for &m in prefix {
        cases.extend((0..grid[m].len()).filter(|&c| grid[m][c]));
    }
    cases.len()
}

fn greedy_vs_brute_force() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..50 {
        let n_mrs = rng.random_range(1..=4);
        let n_cases = rng.random_range(1..=6);
        let grid: Vec<Vec<bool>> =
            (0..n_mrs).map(|_| (0..n_cases).map(|_| rng.random_bool(0.4)).collect()).collect();
        let mut matrix = OutcomeMatrix::empty(
            (1..=n_mrs as u8).map(mr).collect(),
            (0..n_cases).map(|c| format!("s{c}")).collect(),
        );
        for (m, row) in grid.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                matrix.record(m, c, v);
            }
        }
        let greedy: Vec<usize> = rank_fault_greedy(&matrix, None)
            .map_err(|e| e.to_string())?
            .sequence
            .iter()
            .map(|id| matrix.mr_index(*id).unwrap())
            .collect();
        let all = permutations(&(0..n_mrs).collect::<Vec<_>>());
        for k in 1..=n_mrs {
            let best = all
                .iter()
                .filter(|p| p[..k - 1] == greedy[..k - 1])
                .map(|p| covered(&grid, &p[..k]))
                .max()
                .unwrap();
            if covered(&grid, &greedy[..k]) != best {
                return Err(format!("trial {trial}: step {k} covers less than a brute-force extension"));
            }
        }
    }
    within(started.elapsed(), 10)?;
    Ok(format!("50 matrices, {:.3}s", started.elapsed().as_secs_f64()))
}

fn mrprio(out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_mrprio"))
        .arg("--config")
        .arg(demo_dir().join("config.json"))
        .arg("--out")
        .arg(out)
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("mrprio {} exited with {status}", args.join(" ")));
    }
    Ok(())
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism_round_trip() -> Outcome {
    let started = Instant::now();
    let mut runs = Vec::new();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        mrprio(dir.path(), &["pairs"])?;
        mrprio(dir.path(), &["prioritize", "--strategy", "diversity"])?;
        mrprio(dir.path(), &["prioritize", "--strategy", "distance"])?;
        let mut files = files_under(dir.path());
        files.retain(|p, _| !p.starts_with("timing"));
        runs.push(files);
    }
    if runs[0].keys().ne(runs[1].keys()) {
        return Err("the two runs wrote different file sets".into());
    }
    for (path, bytes) in &runs[0] {
        if runs[1][path] != *bytes {
            return Err(format!("{} differs between runs", path.display()));
        }
    }
    within(started.elapsed(), 30)?;
    Ok(format!("{} files identical, {:.2}s", runs[0].len(), started.elapsed().as_secs_f64()))
}

fn replay_demo() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    mrprio(out, &["pairs"])?;
    for s in ["diversity", "distance", "random"] {
        mrprio(out, &["prioritize", "--strategy", s])?;
    }
    mrprio(out, &["run", "--mode", "replay"])?;
    mrprio(out, &["prioritize", "--strategy", "fault"])?;
    mrprio(out, &["evaluate"])?;
    let report: EvalReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).map_err(|e| e.to_string())?;

    let diversity = report.strategy(Strategy::Diversity).ok_or("no diversity result")?;
    let random = report.strategy(Strategy::Random).ok_or("no random result")?;
    let final_fdr = diversity.curve.last().ok_or("empty curve")?;
    if final_fdr.k != 11 || final_fdr.cumulative_fdr != 0.2 {
        return Err(format!("cumulative FDR at k={} is {}, expected 0.2 at k=11", final_fdr.k, final_fdr.cumulative_fdr));
    }
    let (d_ttff, r_ttff) = (diversity.ttff.ok_or("diversity found no fault")?, random.ttff.ok_or("random found no fault")?);
    if d_ttff > r_ttff {
        return Err(format!("diversity TTFF {d_ttff} exceeds random mean {r_ttff}"));
    }
    for s in Strategy::ALL {
        let r = report.strategy(s).ok_or(format!("no {s} result"))?;
        if r.curve.windows(2).any(|w| w[1].cumulative_fdr < w[0].cumulative_fdr) {
            return Err(format!("{s} curve decreases"));
        }
    }
    Ok(format!("FDR@11 = 0.2, TTFF diversity {d_ttff} <= random mean {r_ttff:.2}, curves monotone"))
}

const FILLER: [&str; 24] = [
    "write", "describe", "a", "the", "for", "happy", "terrible", "story", "plan", "not", "great", "angry",
    "student", "nurse", "with", "afraid", "wonderful", "of", "and", "bad", "surprised", "love", "career", "advice",
];

fn attribute_values(table: &SensitiveAttributeTable) -> Vec<String> {
    table.categories().flat_map(|c| table.values(c).unwrap().iter().cloned()).collect()
}

fn random_sentence(rng: &mut ChaCha8Rng, values: &[String]) -> String {
    let len = rng.random_range(0..14);
    (0..len)
        .map(|_| {
            if rng.random_bool(0.25) {
                values.choose(rng).unwrap().clone()
            } else {
                FILLER.choose(rng).unwrap().to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn metric_ranges() -> Outcome {
    let table = SensitiveAttributeTable::builtin();
    let values = attribute_values(&table);
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let pairs: Vec<TestPair> = (0..10_000)
        .map(|i| {
            let mut source = random_sentence(&mut rng, &values);
            if source.trim().is_empty() {
                source = "empty".into();
            }
            TestPair {
                mr_id: mr(1),
                source: SourceTestCase::annotated(format!("r{i}"), source, &table).unwrap(),
                follow_up_text: random_sentence(&mut rng, &values),
                transform_note: String::new(),
            }
        })
        .collect();
    let (emb, sent, tone) = (HashedEmbedding, LexiconSentiment::builtin(), KeywordTone::builtin());
    let analyzers = Analyzers { table: &table, embedding: &emb, sentiment: &sent, tone: &tone };
    let report = score_all(&BTreeMap::from([(mr(1), pairs)]), analyzers).map_err(|e| e.to_string())?;
    for p in &report.scores[0].pairs {
        let [cs, ld, ner, se, ss, tb] = p.values();
        let unit_ok = [cs, ld, ner, se, tb].iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v));
        if !unit_ok || !ss.is_finite() || !(0.0..=2.0).contains(&ss) {
            return Err(format!("pair {} out of range: {:?}", p.pair_index, p.values()));
        }
    }
    Ok(format!("{} pairs in range", report.scores[0].pairs.len()))
}

fn span_conservation() -> Outcome {
    let table = SensitiveAttributeTable::builtin();
    let corpus = load_corpus(demo_dir().join("corpus.jsonl"), &table).map_err(|e| e.to_string())?;
    let sorted_values = |text: &str| {
        let mut v: Vec<String> = annotate_attributes(text, &table).into_iter().map(|s| s.value.to_lowercase()).collect();
        v.sort();
        v
    };
    let mut checked = 0;
    for id in MrId::all() {
        for pair in derive_pairs(id, &corpus, &table, 11).map_err(|e| e.to_string())?.pairs {
            let k = pair.source.attributes.len();
            let after = annotate_attributes(&pair.follow_up_text, &table).len();
            let ok = match id.number() {
                1 => after + 1 == k,
                2 => after == 0,
                4 | 5 | 7 | 8 | 10 => after == k,
                6 | 11 => after == k + 1,
                _ => sorted_values(&pair.follow_up_text) == sorted_values(&pair.source.text),
            };
            if !ok {
                return Err(format!("{id} on {}: {:?} -> {:?}", pair.source.id, pair.source.text, pair.follow_up_text));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} pairs across 11 MRs"))
}

/// Sources shaped like the fixture prompts, with random attribute choices.
fn synthetic_case(rng: &mut ChaCha8Rng, table: &SensitiveAttributeTable, id: usize) -> SourceTestCase {
    const TASKS: [&str; 6] = [
        "Write a job description",
        "Suggest career paths",
        "Describe the daily routine",
        "Plan a healthy diet",
        "Recommend study strategies",
        "Give feedback on a presentation",
    ];
    let pick = |rng: &mut ChaCha8Rng, cat: &str| {
        let cat = table.categories().find(|c| c.as_str() == cat).unwrap();
        table.values(cat).unwrap().choose(rng).unwrap().clone()
    };
    let mut attrs = Vec::new();
    for cat in ["AGE", "ECONOMIC_CONDITIONS", "GENDER", "ETHNICITY", "MARITAL_STATUS", "POLITICAL_VIEWS"] {
        if rng.random_bool(0.35) {
            attrs.push(pick(rng, cat));
        }
    }
    let noun = pick(rng, "OCCUPATION");
    let mut text = format!("{} for a {} {noun}", TASKS.choose(rng).unwrap(), attrs.join(" "));
    if rng.random_bool(0.3) {
        text.push_str(&format!(" from {}", pick(rng, "NATIONALITY")));
    }
    text.push('.');
    SourceTestCase::annotated(format!("syn{id}"), mrprio_core::text::tidy(&text), table).unwrap()
}

fn prioritization_wall_time() -> Outcome {
    let table = SensitiveAttributeTable::builtin();
    let engine = MrEngine::new(table.clone(), MrTemplates::default());
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut by_mr: BTreeMap<MrId, Vec<TestPair>> = BTreeMap::new();
    for id in MrId::all() {
        let mut pairs = Vec::new();
        let mut attempts = 0;
        while pairs.len() < 500 {
            attempts += 1;
            if attempts > 50_000 {
                return Err(format!("could not synthesize 500 pairs for {id}"));
            }
            let case = synthetic_case(&mut rng, &table, attempts);
            if let Ok(p) = engine.apply(id, &case, 7) {
                pairs.push(p);
            }
        }
        by_mr.insert(id, pairs);
    }
    let (emb, sent, tone) = (HashedEmbedding, LexiconSentiment::builtin(), KeywordTone::builtin());
    let analyzers = Analyzers { table: &table, embedding: &emb, sentiment: &sent, tone: &tone };
    let started = Instant::now();
    let report = score_all(&by_mr, analyzers).map_err(|e| e.to_string())?;
    let ordering = rank_by_fds(&report.final_scores()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    if ordering.sequence.len() != 11 {
        return Err(format!("ordering has {} MRs", ordering.sequence.len()));
    }
    within(elapsed, 60)?;
    Ok(format!("11 x 500 pairs in {:.2}s", elapsed.as_secs_f64()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("fds_worked_example_2_67", fds_worked_example),
        ("sentiment_0_05_and_tone_0_0", sentiment_and_tone_worked_example),
        ("levenshtein_matches_dp_oracle", levenshtein_oracle),
        ("greedy_matches_brute_force", greedy_vs_brute_force),
        ("pairs_and_prioritize_are_deterministic", determinism_round_trip),
        ("replay_demo_end_to_end", replay_demo),
        ("metric_ranges_on_10k_pairs", metric_ranges),
        ("span_conservation_on_fixture", span_conservation),
        ("diversity_prioritization_wall_time", prioritization_wall_time),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
                Err(format!("panicked: {}", msg.unwrap_or_default()))
            });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
