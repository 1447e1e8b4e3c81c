//! On-disk cache of command outputs.
//!
//! Each entry is one file named by the SHA-256 of its key. The first line
//! records the schema version and the SHA-256 of the payload; an entry whose
//! header or hash does not check out is ignored and overwritten.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256(s: &str) -> String {
    hex(&Sha256::digest(s.as_bytes()))
}

/// `TAUTREL_CACHE_DIR`, else `$XDG_CACHE_HOME/tautrel`, else
/// `~/.cache/tautrel`.
pub fn default_dir() -> Option<PathBuf> {
    if let Some(d) = std::env::var_os("TAUTREL_CACHE_DIR") {
        return Some(PathBuf::from(d));
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return Some(PathBuf::from(d).join("tautrel"));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("tautrel"))
}

pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    /// A cache rooted at `dir`; `None` disables caching.
    pub fn new(dir: Option<PathBuf>) -> Self {
        Cache { dir }
    }

    fn path(&self, command: &str, params: &str) -> Option<PathBuf> {
        let key = format!("schema={SCHEMA_VERSION}\n{command}\n{params}");
        self.dir.as_ref().map(|d| d.join(format!("{}.entry", sha256(&key))))
    }

    fn read(path: &Path) -> Option<String> {
        let raw = fs::read_to_string(path).ok()?;
        let (header, payload) = raw.split_once('\n')?;
        let expected = format!("tautrel-cache schema={SCHEMA_VERSION} sha256={}", sha256(payload));
        (header == expected).then(|| payload.to_string())
    }

    fn write(path: &Path, payload: &str) -> std::io::Result<()> {
        let dir = path.parent().expect("entry has a parent");
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            writeln!(f, "tautrel-cache schema={SCHEMA_VERSION} sha256={}", sha256(payload))?;
            f.write_all(payload.as_bytes())?;
        }
        fs::rename(tmp, path)
    }

    /// The cached output for `(command, params)`, computing and storing it on
    /// a miss. Failing to store is not an error.
    pub fn get_or_compute<E>(
        &self,
        command: &str,
        params: &str,
        compute: impl FnOnce() -> Result<String, E>,
    ) -> Result<String, E> {
        let path = self.path(command, params);
        if let Some(hit) = path.as_deref().and_then(Self::read) {
            return Ok(hit);
        }
        let out = compute()?;
        if let Some(p) = path {
            let _ = Self::write(&p, &out);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(Some(dir.path().to_path_buf()));
        let mut calls = 0;
        let mut get = |cache: &Cache| {
            cache
                .get_or_compute::<()>("basis", "g=1 n=1", || {
                    calls += 1;
                    Ok("payload\nline two\n".to_string())
                })
                .unwrap()
        };
        assert_eq!(get(&cache), "payload\nline two\n");
        assert_eq!(get(&cache), "payload\nline two\n");
        assert_eq!(calls, 1);

        let entry = fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
        let text = fs::read_to_string(&entry).unwrap();
        fs::write(&entry, text.replace("two", "2")).unwrap();
        assert!(Cache::read(&entry).is_none());
    }

    #[test]
    fn disabled_cache_always_computes() {
        let cache = Cache::new(None);
        let mut calls = 0;
        for _ in 0..2 {
            cache
                .get_or_compute::<()>("x", "y", || {
                    calls += 1;
                    Ok(String::new())
                })
                .unwrap();
        }
        assert_eq!(calls, 2);
    }
}
