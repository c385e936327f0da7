use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// One stored LLM reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedReply {
    pub model: String,
    pub prompt: String,
    pub reply: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Content-addressed on-disk reply store: one JSON file per reply, named by
/// its 64-hex [`cache_key`](super::cache_key).
#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ResponseCache {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, key: &str) -> Option<CachedReply> {
        let text = fs::read_to_string(self.dir.join(key)).ok()?;
        match serde_json::from_str(&text) {
            Ok(entry) => Some(entry),
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {key}: {e}");
                None
            }
        }
    }

    /// Writes through a temporary file and rename so readers never see a
    /// partial entry.
    pub fn put(&self, key: &str, entry: &CachedReply) -> std::io::Result<()> {
        let _guard = self.write_lock.lock().expect("cache write lock");
        let tmp = self.dir.join(format!(".{key}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(serde_json::to_string_pretty(entry)?.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(tmp, self.dir.join(key))
    }

    pub fn len(&self) -> usize {
        fs::read_dir(&self.dir)
            .map(|entries| {
                entries
                    .filter_map(Result::ok)
                    .filter(|e| {
                        let name = e.file_name();
                        let name = name.to_string_lossy();
                        name.len() == 64 && name.bytes().all(|b| b.is_ascii_hexdigit())
                    })
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refiner::cache_key;

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let key = cache_key("m", "p");
        assert!(cache.get(&key).is_none());
        let entry = CachedReply {
            model: "m".into(),
            prompt: "p".into(),
            reply: "r".into(),
            prompt_tokens: 3,
            completion_tokens: 1,
        };
        cache.put(&key, &entry).unwrap();
        assert_eq!(cache.get(&key), Some(entry));
        assert_eq!(cache.len(), 1);
        assert!(dir.path().join(&key).is_file());
    }
}
