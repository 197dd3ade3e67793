//! Content-addressed stage cache.
//!
//! One JSON file per (stage, canonical parameters). The file name hashes
//! only those two, so an entry written by another code version is found,
//! reported as stale and overwritten instead of silently piling up.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bumped whenever a stage's payload layout or semantics change.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+c1");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    /// `stage|params|version`.
    pub key: String,
    pub version: String,
    /// Hex sha256 of `payload`.
    pub checksum: String,
    pub payload: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lookup {
    Hit(String),
    Miss,
    Corrupt(String),
    Stale { found: String },
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[derive(Clone, Debug)]
pub struct Cache {
    root: PathBuf,
    version: String,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self::with_version(root, CODE_VERSION)
    }

    pub fn with_version(root: impl Into<PathBuf>, version: &str) -> Self {
        Cache { root: root.into(), version: version.to_string() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    fn full_key(&self, key: &str) -> String {
        format!("{key}|{}", self.version)
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.root.join(format!("{}.json", &sha256_hex(key.as_bytes())[..32]))
    }

    pub fn load(&self, key: &str) -> Lookup {
        let path = self.path_for(key);
        let raw = match fs::read(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Lookup::Miss,
            Err(e) => return Lookup::Corrupt(format!("unreadable: {e}")),
        };
        let entry: CacheEntry = match serde_json::from_slice(&raw) {
            Ok(entry) => entry,
            Err(e) => return Lookup::Corrupt(format!("malformed entry: {e}")),
        };
        if sha256_hex(entry.payload.as_bytes()) != entry.checksum {
            return Lookup::Corrupt("checksum mismatch".into());
        }
        if entry.version != self.version {
            return Lookup::Stale { found: entry.version };
        }
        if entry.key != self.full_key(key) {
            return Lookup::Corrupt(format!("entry belongs to key {:?}", entry.key));
        }
        Lookup::Hit(entry.payload)
    }

    /// Writes to a temporary sibling, syncs it, then renames over the target.
    pub fn store(&self, key: &str, payload: &str) -> std::io::Result<()> {
        fs::create_dir_all(&self.root)?;
        let entry = CacheEntry {
            key: self.full_key(key),
            version: self.version.clone(),
            checksum: sha256_hex(payload.as_bytes()),
            payload: payload.to_string(),
        };
        let body = serde_json::to_vec_pretty(&entry).map_err(std::io::Error::other)?;
        let target = self.path_for(key);
        let tmp = target.with_extension(format!("tmp.{}", std::process::id()));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&body)?;
            f.sync_all()?;
            fs::rename(&tmp, &target)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result
    }
}
