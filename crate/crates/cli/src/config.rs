//! Run configuration: one JSON file describing corpus, seeds, providers,
//! model endpoint, cassette and outputs. Relative paths resolve against the
//! directory holding the config file. String values of the form `${VAR}`
//! are read from the environment (intended for credentials).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use serde_json::Value;

use mrprio_core::executor::{CassetteMode, DecodingConfig, ExecutorOptions, RetryPolicy};
use mrprio_core::mr::MrId;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub corpus: u64,
    pub mr: u64,
    pub random_baseline: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProviderConfig {
    Builtin,
    Remote {
        url: String,
        #[serde(default)]
        api_key: Option<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Providers {
    pub embedding: ProviderConfig,
    pub sentiment: ProviderConfig,
    pub tone: ProviderConfig,
}

impl Default for Providers {
    fn default() -> Self {
        Providers {
            embedding: ProviderConfig::Builtin,
            sentiment: ProviderConfig::Builtin,
            tone: ProviderConfig::Builtin,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub id: String,
    pub base_url: String,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default)]
    pub decoding: DecodingConfig,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    120
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CassetteConfig {
    pub path: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: CassetteMode,
}

fn default_mode() -> CassetteMode {
    CassetteMode::Replay
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutorConfig {
    pub max_concurrency: usize,
    pub max_error_fraction: f64,
    pub retry: RetryPolicy,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        let o = ExecutorOptions::default();
        ExecutorConfig {
            max_concurrency: o.max_concurrency,
            max_error_fraction: o.max_error_fraction,
            retry: RetryPolicy::default(),
        }
    }
}

impl ExecutorConfig {
    pub fn options(&self) -> ExecutorOptions {
        ExecutorOptions {
            max_concurrency: self.max_concurrency,
            max_error_fraction: self.max_error_fraction,
        }
    }
}

/// A template expanded into extra corpus cases.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    pub template: String,
    pub slots: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    #[serde(default)]
    pub gazetteer: Option<PathBuf>,
    #[serde(default)]
    pub mr_templates: Option<PathBuf>,
    #[serde(default)]
    pub corpus_templates: Vec<TemplateSpec>,
    #[serde(default)]
    pub mrs: Option<Vec<String>>,
    pub seeds: Seeds,
    #[serde(default)]
    pub providers: Providers,
    pub model: ModelConfig,
    pub cassette: CassetteConfig,
    #[serde(default)]
    pub executor: ExecutorConfig,
    #[serde(default = "default_random_count")]
    pub random_count: usize,
    #[serde(default)]
    pub distance_invert: bool,
    #[serde(default)]
    pub fault_tie_seed: Option<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,

    /// The file as written, kept for the report.
    #[serde(skip)]
    pub snapshot: Value,
}

fn default_random_count() -> usize {
    mrprio_core::prioritizer::DEFAULT_RANDOM_COUNT
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// `${VAR}` → value of VAR; anything else unchanged.
pub fn interpolate(value: &str) -> Result<String> {
    match value.strip_prefix("${").and_then(|v| v.strip_suffix('}')) {
        Some(var) => std::env::var(var)
            .with_context(|| format!("environment variable {var} is not set")),
        None => Ok(value.to_string()),
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let snapshot: Value = serde_json::from_str(&text)
            .with_context(|| format!("{} is not valid JSON", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_value(snapshot.clone())
            .map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        cfg.snapshot = snapshot;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.corpus = resolve(base, &cfg.corpus);
        cfg.gazetteer = cfg.gazetteer.map(|g| resolve(base, &g));
        cfg.mr_templates = cfg.mr_templates.map(|t| resolve(base, &t));
        cfg.cassette.path = resolve(base, &cfg.cassette.path);
        cfg.output_dir = resolve(base, &cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let must_exist = |field: &str, p: &Path| -> Result<()> {
            if p.exists() {
                Ok(())
            } else {
                Err(invalid(format!("{field}: {} does not exist", p.display())))
            }
        };
        must_exist("corpus", &self.corpus)?;
        if let Some(g) = &self.gazetteer {
            must_exist("gazetteer", g)?;
        }
        if let Some(t) = &self.mr_templates {
            must_exist("mr_templates", t)?;
        }
        self.selected_mrs()?;
        if self.random_count == 0 {
            bail!(invalid("random_count: must be at least 1".into()));
        }
        let f = self.executor.max_error_fraction;
        if !(0.0..=1.0).contains(&f) {
            bail!(invalid(format!("executor.max_error_fraction: {f} is outside [0, 1]")));
        }
        if self.executor.max_concurrency == 0 {
            bail!(invalid("executor.max_concurrency: must be at least 1".into()));
        }
        Ok(())
    }

    /// Selected MRs in ascending order; all eleven when unset.
    pub fn selected_mrs(&self) -> Result<Vec<MrId>> {
        let Some(list) = &self.mrs else {
            return Ok(MrId::all().collect());
        };
        let mut ids = Vec::new();
        for s in list {
            let id: MrId = s.parse().map_err(|e| invalid(format!("mrs: {e}")))?;
            if ids.contains(&id) {
                bail!(invalid(format!("mrs: {id} listed twice")));
            }
            ids.push(id);
        }
        if ids.is_empty() {
            bail!(invalid("mrs: select at least one MR".into()));
        }
        ids.sort();
        Ok(ids)
    }

    /// Replace every seed (the `--seed` flag).
    pub fn override_seeds(&mut self, seed: u64) {
        self.seeds = Seeds { corpus: seed, mr: seed, random_baseline: seed };
    }

    pub fn model_api_key(&self) -> Result<Option<String>> {
        self.model.api_key.as_deref().map(interpolate).transpose()
    }
}

fn invalid(msg: String) -> anyhow::Error {
    mrprio_core::Error::Validation(msg).into()
}
