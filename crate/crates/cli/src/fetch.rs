//! The `fetch-mnist` verb: download, decompress, verify, then write.
//!
//! A file is written only after its length and SHA-256 match the manifest,
//! and files that already match are not downloaded again.

use std::io::Read;
use std::path::Path;
use std::time::Duration;

use anrat::data::manifest::{is_verified, parse_manifest, verify_bytes, ManifestEntry};
use anrat::report::write_atomic;
use flate2::read::GzDecoder;

use crate::{Failure, Outcome};

/// Largest response body accepted, compressed or not.
const MAX_BODY: u64 = 256 * 1024 * 1024;
const TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileStatus {
    AlreadyVerified,
    Downloaded,
}

fn download(agent: &ureq::Agent, url: &str) -> Outcome<Vec<u8>> {
    let net = |e: ureq::Error| Failure::Network(format!("{url}: {e}"));
    let mut response = agent.get(url).call().map_err(net)?;
    response.body_mut().with_config().limit(MAX_BODY).read_to_vec().map_err(net)
}

/// Bodies from `.gz` URLs are gunzipped; the manifest describes the
/// decompressed file.
fn decode(entry: &ManifestEntry, body: Vec<u8>) -> Outcome<Vec<u8>> {
    if !entry.url.ends_with(".gz") {
        return Ok(body);
    }
    let mut out = Vec::new();
    GzDecoder::new(body.as_slice())
        .take(MAX_BODY)
        .read_to_end(&mut out)
        .map_err(|e| Failure::Digest(format!("{}: not a valid gzip stream: {e}", entry.file)))?;
    Ok(out)
}

/// Fetches every manifest entry into `dest`, in manifest order.
pub fn fetch_mnist(manifest: &Path, dest: &Path) -> Outcome<Vec<(String, FileStatus)>> {
    let text = std::fs::read_to_string(manifest)
        .map_err(|e| Failure::Config(format!("cannot read manifest {}: {e}", manifest.display())))?;
    let entries = parse_manifest(&text)?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(TIMEOUT))
        .build()
        .into();
    let mut statuses = Vec::with_capacity(entries.len());
    for entry in &entries {
        if is_verified(dest, entry).map_err(Failure::data)? {
            statuses.push((entry.file.clone(), FileStatus::AlreadyVerified));
            continue;
        }
        let bytes = decode(entry, download(&agent, &entry.url)?)?;
        verify_bytes(entry, &bytes)?;
        write_atomic(&dest.join(&entry.file), &bytes).map_err(Failure::data)?;
        statuses.push((entry.file.clone(), FileStatus::Downloaded));
    }
    Ok(statuses)
}
