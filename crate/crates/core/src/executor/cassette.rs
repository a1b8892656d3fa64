//! Record/replay store for remote calls.
//!
//! Entries are keyed by the SHA-256 of the canonical (sorted-key) JSON of the
//! request, so the key is stable across runs and formatting changes. Replay
//! never touches the network; record persists every new exchange before
//! returning it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CassetteMode {
    Record,
    Replay,
    Live,
}

impl std::fmt::Display for CassetteMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CassetteMode::Record => "record",
            CassetteMode::Replay => "replay",
            CassetteMode::Live => "live",
        })
    }
}

impl std::str::FromStr for CassetteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "record" => Ok(CassetteMode::Record),
            "replay" => Ok(CassetteMode::Replay),
            "live" => Ok(CassetteMode::Live),
            other => Err(Error::validation(format!("unknown cassette mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub request: Value,
    pub response_text: String,
}

/// Serialize JSON with object keys in sorted order, independent of how the
/// `Value` was built.
pub fn canonical_json(value: &Value) -> String {
    fn write(v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                out.push('{');
                for (i, k) in keys.into_iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&Value::String(k.clone()).to_string());
                    out.push(':');
                    write(&map[k], out);
                }
                out.push('}');
            }
            Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write(item, out);
                }
                out.push(']');
            }
            scalar => out.push_str(&scalar.to_string()),
        }
    }
    let mut out = String::new();
    write(value, &mut out);
    out
}

pub fn request_key(request: &Value) -> String {
    let digest = Sha256::digest(canonical_json(request).as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

pub struct Cassette {
    mode: CassetteMode,
    path: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, CassetteEntry>>,
    write_lock: Mutex<()>,
}

impl Cassette {
    /// Open a cassette file. Replay requires the file to exist; record
    /// starts empty if it does not.
    pub fn open(path: impl Into<PathBuf>, mode: CassetteMode) -> Result<Self> {
        let path = path.into();
        let entries = if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?
        } else if mode == CassetteMode::Replay {
            return Err(Error::validation(format!(
                "replay cassette {} does not exist",
                path.display()
            )));
        } else {
            BTreeMap::new()
        };
        Ok(Cassette {
            mode,
            path: Some(path),
            entries: RwLock::new(entries),
            write_lock: Mutex::new(()),
        })
    }

    pub fn in_memory(mode: CassetteMode) -> Self {
        Cassette {
            mode,
            path: None,
            entries: RwLock::new(BTreeMap::new()),
            write_lock: Mutex::new(()),
        }
    }

    pub fn mode(&self) -> CassetteMode {
        self.mode
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<CassetteEntry> {
        self.entries.read().unwrap().get(key).cloned()
    }

    /// Insert an entry directly (used to seed cassettes in tests).
    pub fn insert(&self, request: Value, response_text: String) -> Result<String> {
        let key = request_key(&request);
        self.store(key.clone(), CassetteEntry { request, response_text })?;
        Ok(key)
    }

    /// Resolve `request` according to the mode. `network` performs the real
    /// call and is only invoked in record and live modes.
    pub fn fetch(&self, request: &Value, network: impl FnOnce() -> Result<String>) -> Result<String> {
        let key = request_key(request);
        match self.mode {
            CassetteMode::Replay => self
                .entries
                .read()
                .unwrap()
                .get(&key)
                .map(|e| e.response_text.clone())
                .ok_or(Error::ReplayMiss { key }),
            CassetteMode::Live => network(),
            CassetteMode::Record => {
                let response_text = network()?;
                self.store(
                    key,
                    CassetteEntry {
                        request: request.clone(),
                        response_text: response_text.clone(),
                    },
                )?;
                Ok(response_text)
            }
        }
    }

    fn store(&self, key: String, entry: CassetteEntry) -> Result<()> {
        let _guard = self.write_lock.lock().unwrap();
        let snapshot = {
            let mut entries = self.entries.write().unwrap();
            entries.insert(key, entry);
            self.path.as_ref().map(|_| {
                serde_json::to_vec_pretty(&*entries).map(|mut b| {
                    b.push(b'\n');
                    b
                })
            })
        };
        if let (Some(path), Some(bytes)) = (&self.path, snapshot) {
            write_atomically(path, &bytes?)?;
        }
        Ok(())
    }
}

/// Write through a sibling temp file and rename over the target.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("cassette");
    let tmp = dir.join(format!(".{file_name}.tmp{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
