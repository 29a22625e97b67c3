//! Content-addressed response store: `<dir>/<key[..2]>/<key>.json`.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::backends::InferenceResponse;
use crate::dataset::QuestionRecord;
use crate::error::{Error, Result};

const KEY_VERSION: &str = "hoicue-cache-v1";

/// Hex SHA-256 over length-prefixed fields, so field boundaries cannot shift.
///
/// Sampling parameters are deliberately absent: two configurations that send
/// the same prompt and pixels share an entry.
pub fn cache_key(
    record: &QuestionRecord,
    prompt: &str,
    image_digests: &[String],
    backend_identity: &str,
    decoding_params: &str,
) -> String {
    let mut h = Sha256::new();
    let mut field = |bytes: &[u8]| {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    };
    field(KEY_VERSION.as_bytes());
    field(record.id.as_bytes());
    field(prompt.as_bytes());
    field(&(image_digests.len() as u64).to_le_bytes());
    for d in image_digests {
        field(d.as_bytes());
    }
    field(backend_identity.as_bytes());
    field(decoding_params.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2.min(key.len())]).join(format!("{key}.json"))
    }

    /// Unreadable or corrupt entries count as misses.
    pub fn get(&self, key: &str) -> Option<InferenceResponse> {
        let bytes = std::fs::read(self.path(key)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    /// Write-then-rename, so concurrent readers never see a partial entry.
    pub fn put(&self, key: &str, response: &InferenceResponse) -> Result<()> {
        let path = self.path(key);
        let shard = path.parent().expect("cache paths have a shard dir");
        std::fs::create_dir_all(shard).map_err(|e| Error::io(shard, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(shard).map_err(|e| Error::io(shard, e))?;
        serde_json::to_writer(&mut tmp, response).expect("plain data serializes");
        tmp.flush().map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        std::fs::read_dir(&self.dir)
            .map(|shards| {
                shards
                    .filter_map(|s| s.ok())
                    .filter_map(|s| std::fs::read_dir(s.path()).ok())
                    .map(|entries| entries.count())
                    .sum()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
