//! Plain-text checksum manifests.
//!
//! One entry per line, whitespace separated:
//!
//! ```text
//! # file                   bytes     sha256                                                            url
//! train-labels-idx1-ubyte  60008     65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5  https://example.org/train-labels-idx1-ubyte.gz
//! ```
//!
//! Length and digest describe the file as stored on disk, after any
//! decompression of the download. Blank lines and `#` comments are ignored.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub length: u64,
    /// Lowercase hex SHA-256.
    pub sha256: String,
    pub url: String,
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| Error::Config(format!("manifest line {}: {what}", n + 1));
        let [file, length, sha256, url] = fields[..] else {
            return Err(bad("expected `file bytes sha256 url`"));
        };
        if file.contains('/') || file.contains('\\') || file == ".." {
            return Err(bad("file name must not contain a path"));
        }
        let length = length.parse().map_err(|_| bad("byte length is not an integer"))?;
        if sha256.len() != 64 || !sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad("sha256 must be 64 hex digits"));
        }
        entries.push(ManifestEntry {
            file: file.to_string(),
            length,
            sha256: sha256.to_ascii_lowercase(),
            url: url.to_string(),
        });
    }
    if entries.is_empty() {
        return Err(Error::Config("manifest lists no files".into()));
    }
    Ok(entries)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    parse_manifest(&std::fs::read_to_string(path)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Checks length first, then digest.
pub fn verify_bytes(entry: &ManifestEntry, bytes: &[u8]) -> Result<()> {
    if bytes.len() as u64 != entry.length {
        return Err(Error::Digest {
            file: entry.file.clone(),
            detail: format!("{} bytes, expected {}", bytes.len(), entry.length),
        });
    }
    let digest = sha256_hex(bytes);
    if digest != entry.sha256 {
        return Err(Error::Digest {
            file: entry.file.clone(),
            detail: format!("sha256 {digest}, expected {}", entry.sha256),
        });
    }
    Ok(())
}

/// True when `dir/file` exists and matches the entry.
pub fn is_verified(dir: &Path, entry: &ManifestEntry) -> Result<bool> {
    let path = dir.join(&entry.file);
    match std::fs::metadata(&path) {
        Ok(meta) if meta.len() == entry.length => {
            Ok(verify_bytes(entry, &std::fs::read(&path)?).is_ok())
        }
        Ok(_) => Ok(false),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
        Err(e) => Err(e.into()),
    }
}
