//! Content-addressed transcript store:
//! `<root>/<prompt_hash>/<backend_id>/trial-<n>.json`.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::{QueryError, Transcript};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptCache {
    root: PathBuf,
}

fn safe_component(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

impl TranscriptCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, prompt_hash: &str, backend_id: &str, trial: u32) -> PathBuf {
        self.root
            .join(safe_component(prompt_hash))
            .join(safe_component(backend_id))
            .join(format!("trial-{trial}.json"))
    }

    /// A missing file is a miss; an unreadable one is reported and treated
    /// as a miss so the trial is re-run.
    pub fn get(&self, prompt_hash: &str, backend_id: &str, trial: u32) -> Option<Transcript> {
        let path = self.path(prompt_hash, backend_id, trial);
        let bytes = std::fs::read(&path).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(t) => Some(t),
            Err(e) => {
                log::warn!("ignoring corrupt transcript {}: {e}", path.display());
                None
            }
        }
    }

    /// Writes to a temporary file in the target directory, then renames, so
    /// concurrent writers and crashes never leave a partial file behind.
    pub fn put(&self, transcript: &Transcript) -> Result<PathBuf, QueryError> {
        let path = self.path(&transcript.prompt_hash, &transcript.backend_id, transcript.trial);
        let dir = path.parent().expect("cache path has a parent");
        let io = |e: std::io::Error| QueryError::Cache(format!("{}: {e}", path.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        let body = serde_json::to_vec_pretty(transcript).expect("transcript serializes");
        tmp.write_all(&body).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(path)
    }
}
