//! Server-side registration records and their line-oriented file format.
//!
//! ```text
//! v1|HL|<id, 16 hex>||<created_at>
//! v1|SLH|<hex of UTF-8 J>|<sid, 16 hex>|<created_at>
//! v1|IMP|<id, 16 hex>|<mu, 16 hex>|<created_at>
//! ```

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::RwLock;

use thiserror::Error;

use super::SchemeKind;

const VERSION_TAG: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RecordEntry {
    Hl { id: u64 },
    /// One row of the shadow-identity table.
    Slh { j: String, sid: u64 },
    Imp { id: u64, mu: u64 },
}

impl RecordEntry {
    pub fn scheme(&self) -> SchemeKind {
        match self {
            RecordEntry::Hl { .. } => SchemeKind::Hl,
            RecordEntry::Slh { .. } => SchemeKind::Slh,
            RecordEntry::Imp { .. } => SchemeKind::Imp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegistrationRecord {
    pub entry: RecordEntry,
    pub created_at: u64,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{0} is already registered")]
    AlreadyRegistered(String),
    #[error("shadow identity {0:#x} is already taken")]
    ShadowCollision(u64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Hl(u64),
    SlhJ(String),
    SlhSid(u64),
    Imp(u64),
}

#[derive(Debug, Default)]
struct Inner {
    records: Vec<RegistrationRecord>,
    index: HashMap<Key, usize>,
    imp_mu: HashMap<u64, u64>,
}

/// The authentication server's only mutable state. Reads take a shared lock;
/// inserts hold the write lock for a single record.
#[derive(Debug, Default)]
pub struct Registry {
    inner: RwLock<Inner>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<RegistrationRecord>) -> Result<Self, RegistryError> {
        let registry = Registry::new();
        for r in records {
            registry.insert(r)?;
        }
        Ok(registry)
    }

    pub fn insert(&self, record: RegistrationRecord) -> Result<(), RegistryError> {
        let mut inner = self.inner.write().expect("registry lock poisoned");
        let keys = match &record.entry {
            RecordEntry::Hl { id } => vec![Key::Hl(*id)],
            RecordEntry::Slh { j, sid } => {
                if inner.index.contains_key(&Key::SlhJ(j.clone())) {
                    return Err(RegistryError::AlreadyRegistered(format!("SLH identity {j:?}")));
                }
                if inner.index.contains_key(&Key::SlhSid(*sid)) {
                    return Err(RegistryError::ShadowCollision(*sid));
                }
                vec![Key::SlhJ(j.clone()), Key::SlhSid(*sid)]
            }
            RecordEntry::Imp { id, .. } => vec![Key::Imp(*id)],
        };
        if let Some(k) = keys.iter().find(|k| inner.index.contains_key(k)) {
            return Err(RegistryError::AlreadyRegistered(format!("{k:?}")));
        }
        let pos = inner.records.len();
        if let RecordEntry::Imp { id, mu } = &record.entry {
            inner.imp_mu.insert(*id, *mu);
        }
        for k in keys {
            inner.index.insert(k, pos);
        }
        inner.records.push(record);
        Ok(())
    }

    pub fn contains_hl(&self, id: u64) -> bool {
        self.read().index.contains_key(&Key::Hl(id))
    }

    pub fn contains_slh_j(&self, j: &str) -> bool {
        self.read().index.contains_key(&Key::SlhJ(j.to_string()))
    }

    pub fn contains_sid(&self, sid: u64) -> bool {
        self.read().index.contains_key(&Key::SlhSid(sid))
    }

    pub fn contains_imp(&self, id: u64, mu: u64) -> bool {
        self.read().imp_mu.get(&id) == Some(&mu)
    }

    pub fn contains_imp_id(&self, id: u64) -> bool {
        self.read().imp_mu.contains_key(&id)
    }

    /// Whether `id` (and `mu` for the improved scheme) names a registered user.
    pub fn knows(&self, scheme: SchemeKind, id: u64, mu: Option<u64>) -> bool {
        match (scheme, mu) {
            (SchemeKind::Hl, None) => self.contains_hl(id),
            (SchemeKind::Slh, None) => self.contains_sid(id),
            (SchemeKind::Imp, Some(mu)) => self.contains_imp(id, mu),
            _ => false,
        }
    }

    pub fn len(&self) -> usize {
        self.read().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of all records in insertion order.
    pub fn records(&self) -> Vec<RegistrationRecord> {
        self.read().records.clone()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().expect("registry lock poisoned")
    }

    pub fn to_text(&self) -> String {
        self.read().records.iter().map(format_record).collect()
    }

    pub fn from_text(text: &str) -> Result<Self, RegistryError> {
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            records.push(parse_record(line).map_err(|msg| RegistryError::Parse { line: n + 1, msg })?);
        }
        let registry = Registry::new();
        for (n, r) in records.into_iter().enumerate() {
            registry.insert(r).map_err(|e| match e {
                RegistryError::AlreadyRegistered(_) | RegistryError::ShadowCollision(_) => {
                    RegistryError::Parse { line: n + 1, msg: e.to_string() }
                }
                other => other,
            })?;
        }
        Ok(registry)
    }
}

fn format_record(r: &RegistrationRecord) -> String {
    let (scheme, f1, f2) = match &r.entry {
        RecordEntry::Hl { id } => ("HL", format!("{id:016x}"), String::new()),
        RecordEntry::Slh { j, sid } => ("SLH", hex::encode(j.as_bytes()), format!("{sid:016x}")),
        RecordEntry::Imp { id, mu } => ("IMP", format!("{id:016x}"), format!("{mu:016x}")),
    };
    format!("{VERSION_TAG}|{scheme}|{f1}|{f2}|{}\n", r.created_at)
}

fn parse_u64_hex(field: &str, what: &str) -> Result<u64, String> {
    if field.len() != 16 || !field.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("{what} must be 16 hex digits, got {field:?}"));
    }
    u64::from_str_radix(field, 16).map_err(|e| format!("{what}: {e}"))
}

fn parse_record(line: &str) -> Result<RegistrationRecord, String> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 5 {
        return Err(format!("expected 5 '|'-separated fields, got {}", fields.len()));
    }
    if fields[0] != VERSION_TAG {
        return Err(format!("unsupported version {:?}", fields[0]));
    }
    let entry = match fields[1] {
        "HL" => {
            if !fields[3].is_empty() {
                return Err("HL records carry no second field".into());
            }
            RecordEntry::Hl { id: parse_u64_hex(fields[2], "id")? }
        }
        "SLH" => {
            let raw = hex::decode(fields[2]).map_err(|e| format!("J: {e}"))?;
            let j = String::from_utf8(raw).map_err(|e| format!("J: {e}"))?;
            if j.is_empty() {
                return Err("J must not be empty".into());
            }
            RecordEntry::Slh { j, sid: parse_u64_hex(fields[3], "sid")? }
        }
        "IMP" => RecordEntry::Imp {
            id: parse_u64_hex(fields[2], "id")?,
            mu: parse_u64_hex(fields[3], "mu")?,
        },
        other => return Err(format!("unknown scheme {other:?}")),
    };
    let created_at = fields[4]
        .parse::<u64>()
        .map_err(|e| format!("created_at: {e}"))?;
    Ok(RegistrationRecord { entry, created_at })
}

pub fn registry_save(registry: &Registry, path: &Path) -> Result<(), RegistryError> {
    fs::write(path, registry.to_text())?;
    Ok(())
}

pub fn registry_load(path: &Path) -> Result<Registry, RegistryError> {
    Registry::from_text(&fs::read_to_string(path)?)
}
