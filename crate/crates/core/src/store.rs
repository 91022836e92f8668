//! Draft store with append-only version history.
//!
//! Layout of the data directory (format version 1):
//!
//! ```text
//! <dir>/FORMAT              "lyricist-store 1"
//! <dir>/index.json          draft summaries, rewritten from the logs on open
//! <dir>/drafts/<id>.log     one record log per draft
//! ```
//!
//! A log is a sequence of records, each framed as a little-endian `u32`
//! payload length, a little-endian `u32` CRC-32 of the payload, then the
//! UTF-8 JSON payload. The first record describes the draft; every later
//! record is one version. Appends are fsynced before they are acknowledged.
//! A torn final record (from a crash mid-write) is truncated on open; a bad
//! record anywhere else is reported as corruption.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, SecondsFormat, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::decode::ControlSpec;
use crate::error::{Error, Result};
use crate::lyrics::LyricsText;

pub const STORE_FORMAT: &str = "lyricist-store 1";
const HEADER_LEN: usize = 8;
const MAX_RECORD_LEN: u32 = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FullText,
    Continuation,
    Revision,
    ManualEdit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Version {
    pub number: u32,
    pub lyrics: LyricsText,
    pub spec: Option<ControlSpec>,
    pub provenance: Provenance,
    pub parent: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restored_from: Option<u32>,
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftSummary {
    pub id: String,
    pub title: String,
    pub created_at: String,
    pub latest_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draft {
    pub id: String,
    pub title: String,
    pub created_at: String,
    pub versions: Vec<Version>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Draft { id: String, title: String, created_at: String },
    Version(Version),
}

struct DraftLog {
    id: String,
    title: String,
    created_at: String,
    path: PathBuf,
    /// Held while appending; serializes writers of one draft.
    file: Mutex<File>,
    versions: RwLock<Vec<Arc<Version>>>,
}

impl DraftLog {
    fn summary(&self) -> DraftSummary {
        DraftSummary {
            id: self.id.clone(),
            title: self.title.clone(),
            created_at: self.created_at.clone(),
            latest_version: self.versions.read().len() as u32,
        }
    }
}

pub struct Store {
    dir: PathBuf,
    drafts: RwLock<HashMap<String, Arc<DraftLog>>>,
    index_lock: Mutex<()>,
}

fn now() -> String {
    let now: DateTime<Utc> = Utc::now();
    now.to_rfc3339_opts(SecondsFormat::Micros, true)
}

fn frame(payload: &[u8]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + payload.len());
    buf.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    buf.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    buf.extend_from_slice(payload);
    buf
}

fn encode(record: &Record) -> Result<Vec<u8>> {
    let payload = serde_json::to_vec(record).map_err(|e| Error::Format(e.to_string()))?;
    Ok(frame(&payload))
}

/// Splits a log into payloads. Returns the payloads and the length of the
/// valid prefix; a bad record that is not the last one is an error.
fn split_records(bytes: &[u8], path: &Path) -> Result<(Vec<Vec<u8>>, usize)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let rest = &bytes[pos..];
        if rest.len() < HEADER_LEN {
            break;
        }
        let len = u32::from_le_bytes(rest[0..4].try_into().expect("4 bytes"));
        let crc = u32::from_le_bytes(rest[4..8].try_into().expect("4 bytes"));
        let end = HEADER_LEN + len as usize;
        if len > MAX_RECORD_LEN || rest.len() < end {
            break;
        }
        let payload = &rest[HEADER_LEN..end];
        if crc32fast::hash(payload) != crc {
            if pos + end < bytes.len() {
                return Err(Error::Format(format!(
                    "{}: checksum mismatch in record at byte {pos}",
                    path.display()
                )));
            }
            break;
        }
        out.push(payload.to_vec());
        pos += end;
    }
    Ok((out, pos))
}

fn sync_dir(dir: &Path) -> Result<()> {
    File::open(dir).and_then(|d| d.sync_all()).map_err(|e| Error::io(dir, e))
}

impl Store {
    /// Opens (creating if needed) a store directory, replaying every draft
    /// log and rewriting the index.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let drafts_dir = dir.join("drafts");
        fs::create_dir_all(&drafts_dir).map_err(|e| Error::io(&drafts_dir, e))?;
        let format_path = dir.join("FORMAT");
        match fs::read_to_string(&format_path) {
            Ok(s) if s.trim() == STORE_FORMAT => {}
            Ok(s) => {
                return Err(Error::Format(format!(
                    "{}: unsupported store format `{}`",
                    format_path.display(),
                    s.trim()
                )))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                fs::write(&format_path, format!("{STORE_FORMAT}\n")).map_err(|e| Error::io(&format_path, e))?;
            }
            Err(e) => return Err(Error::io(&format_path, e)),
        }

        let mut drafts = HashMap::new();
        let entries = fs::read_dir(&drafts_dir).map_err(|e| Error::io(&drafts_dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&drafts_dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("log") {
                continue;
            }
            if let Some(log) = Self::replay(&path)? {
                drafts.insert(log.id.clone(), Arc::new(log));
            }
        }
        let store = Store { dir, drafts: RwLock::new(drafts), index_lock: Mutex::new(()) };
        store.write_index()?;
        Ok(store)
    }

    fn replay(path: &Path) -> Result<Option<DraftLog>> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let (payloads, valid) = split_records(&bytes, path)?;
        let file = OpenOptions::new().read(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
        if valid < bytes.len() {
            tracing::warn!("{}: truncating {} bytes of incomplete record", path.display(), bytes.len() - valid);
            file.set_len(valid as u64).map_err(|e| Error::io(path, e))?;
            file.sync_all().map_err(|e| Error::io(path, e))?;
        }
        let mut records = payloads.iter().map(|p| {
            serde_json::from_slice::<Record>(p).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
        });
        let (id, title, created_at) = match records.next().transpose()? {
            Some(Record::Draft { id, title, created_at }) => (id, title, created_at),
            Some(Record::Version(_)) => {
                return Err(Error::Format(format!("{}: log does not start with a draft record", path.display())))
            }
            None => {
                // Crashed while creating the draft: nothing was acknowledged.
                drop(file);
                fs::remove_file(path).map_err(|e| Error::io(path, e))?;
                return Ok(None);
            }
        };
        let mut versions = Vec::new();
        for r in records {
            match r? {
                Record::Version(v) if v.number as usize == versions.len() + 1 => versions.push(Arc::new(v)),
                Record::Version(v) => {
                    return Err(Error::Format(format!(
                        "{}: version {} out of sequence after {}",
                        path.display(),
                        v.number,
                        versions.len()
                    )))
                }
                Record::Draft { .. } => {
                    return Err(Error::Format(format!("{}: duplicate draft record", path.display())))
                }
            }
        }
        Ok(Some(DraftLog {
            id,
            title,
            created_at,
            path: path.to_path_buf(),
            file: Mutex::new(file),
            versions: RwLock::new(versions),
        }))
    }

    fn write_index(&self) -> Result<()> {
        let _guard = self.index_lock.lock();
        let summaries = self.list_drafts();
        let path = self.dir.join("index.json");
        let tmp = self.dir.join("index.json.tmp");
        let body = serde_json::to_vec_pretty(&summaries).map_err(|e| Error::Format(e.to_string()))?;
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&body).and_then(|_| f.sync_all()).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn draft(&self, id: &str) -> Result<Arc<DraftLog>> {
        self.drafts
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("draft `{id}`")))
    }

    pub fn create_draft(&self, title: &str) -> Result<DraftSummary> {
        let title = title.trim();
        if title.is_empty() {
            return Err(Error::validation("title", "must not be empty"));
        }
        let id = uuid::Uuid::new_v4().simple().to_string();
        let created_at = now();
        let path = self.dir.join("drafts").join(format!("{id}.log"));
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let rec = encode(&Record::Draft { id: id.clone(), title: title.to_string(), created_at: created_at.clone() })?;
        file.write_all(&rec).and_then(|_| file.sync_data()).map_err(|e| Error::io(&path, e))?;
        sync_dir(&self.dir.join("drafts"))?;
        let log = Arc::new(DraftLog {
            id: id.clone(),
            title: title.to_string(),
            created_at,
            path,
            file: Mutex::new(file),
            versions: RwLock::new(Vec::new()),
        });
        let summary = log.summary();
        self.drafts.write().insert(id, log);
        self.write_index()?;
        Ok(summary)
    }

    fn append(&self, log: &DraftLog, make: impl FnOnce(u32, &[Arc<Version>]) -> Result<Version>) -> Result<Version> {
        let mut file = log.file.lock();
        let version = {
            let versions = log.versions.read();
            make(versions.len() as u32 + 1, &versions)?
        };
        let rec = encode(&Record::Version(version.clone()))?;
        file.write_all(&rec).and_then(|_| file.sync_data()).map_err(|e| Error::io(&log.path, e))?;
        log.versions.write().push(Arc::new(version.clone()));
        drop(file);
        if let Err(e) = self.write_index() {
            tracing::warn!("index update failed (rebuilt on next open): {e}");
        }
        Ok(version)
    }

    pub fn append_version(
        &self,
        draft_id: &str,
        lyrics: LyricsText,
        spec: Option<ControlSpec>,
        provenance: Provenance,
    ) -> Result<Version> {
        lyrics.validate("lyrics")?;
        let log = self.draft(draft_id)?;
        self.append(&log, |number, _| {
            Ok(Version {
                number,
                lyrics,
                spec,
                provenance,
                parent: (number > 1).then(|| number - 1),
                restored_from: None,
                created_at: now(),
            })
        })
    }

    /// Appends a copy of version `number` as the new latest version.
    pub fn restore(&self, draft_id: &str, number: u32) -> Result<Version> {
        let log = self.draft(draft_id)?;
        self.append(&log, |next, versions| {
            let old = number
                .checked_sub(1)
                .and_then(|i| versions.get(i as usize))
                .ok_or_else(|| Error::NotFound(format!("version {number} of draft `{draft_id}`")))?;
            Ok(Version {
                number: next,
                lyrics: old.lyrics.clone(),
                spec: old.spec.clone(),
                provenance: old.provenance,
                parent: Some(next - 1),
                restored_from: Some(number),
                created_at: now(),
            })
        })
    }

    pub fn get_version(&self, draft_id: &str, number: u32) -> Result<Version> {
        let log = self.draft(draft_id)?;
        let versions = log.versions.read();
        number
            .checked_sub(1)
            .and_then(|i| versions.get(i as usize))
            .map(|v| v.as_ref().clone())
            .ok_or_else(|| Error::NotFound(format!("version {number} of draft `{draft_id}`")))
    }

    pub fn get_draft(&self, draft_id: &str) -> Result<Draft> {
        let log = self.draft(draft_id)?;
        let versions = log.versions.read().iter().map(|v| v.as_ref().clone()).collect();
        Ok(Draft { id: log.id.clone(), title: log.title.clone(), created_at: log.created_at.clone(), versions })
    }

    /// Summaries ordered by creation time, then id.
    pub fn list_drafts(&self) -> Vec<DraftSummary> {
        let mut out: Vec<DraftSummary> = self.drafts.read().values().map(|d| d.summary()).collect();
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        out
    }
}
