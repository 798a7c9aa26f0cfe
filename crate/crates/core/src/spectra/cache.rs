//! On-disk spectrum cache keyed by model fingerprint.
//!
//! File format, one file per fingerprint:
//!
//! ```text
//! # strip-trace spectrum cache
//! fingerprint = 0123abcd...
//! lambda_max = 2.0000000000000000e2
//! generator = strip-trace 0.1.0
//! ---
//! -2.0000000000000000e2 2
//! ...
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Spectrum, SpectrumError};
use crate::textio::fmt17;
use crate::GENERATOR_VERSION;

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "STRIP_TRACE_CACHE";

const MAGIC: &str = "# strip-trace spectrum cache";
const EXT: &str = "spectrum";

/// Cache directory from the environment, or `fallback`.
pub fn cache_dir_from_env(fallback: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| fallback.to_path_buf())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub fingerprint: String,
    pub lambda_max: f64,
    pub generator: String,
    pub entries: usize,
    pub path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SpectrumCache {
    dir: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SpectrumError + '_ {
    move |source| SpectrumError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> SpectrumCache {
        SpectrumCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("{fingerprint}.{EXT}"))
    }

    /// Writes the spectrum atomically (temporary file, then rename).
    pub fn store(&self, spectrum: &Spectrum) -> Result<PathBuf, SpectrumError> {
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let path = self.path_for(&spectrum.fingerprint);
        let mut text = format!(
            "{MAGIC}\nfingerprint = {}\nlambda_max = {}\ngenerator = {GENERATOR_VERSION}\n---\n",
            spectrum.fingerprint,
            fmt17(spectrum.lambda_max)
        );
        for e in &spectrum.entries {
            text.push_str(&format!("{} {}\n", fmt17(e.lambda), e.mult));
        }
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io_err(&self.dir))?;
        tmp.write_all(text.as_bytes()).map_err(io_err(&path))?;
        tmp.persist(&path).map_err(|e| SpectrumError::Io {
            path: path.display().to_string(),
            source: e.error,
        })?;
        Ok(path)
    }

    fn read(path: &Path) -> Result<(CacheEntry, Spectrum), SpectrumError> {
        let bad = |reason: &str| SpectrumError::Cache {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing header"));
        }
        let mut header = |key: &str| -> Result<String, SpectrumError> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            let (k, v) = line.split_once(" = ").ok_or_else(|| bad("malformed header line"))?;
            if k != key {
                return Err(bad(&format!("expected `{key}`, found `{k}`")));
            }
            Ok(v.to_string())
        };
        let fingerprint = header("fingerprint")?;
        let lambda_max: f64 = header("lambda_max")?.parse().map_err(|_| bad("bad lambda_max"))?;
        let generator = header("generator")?;
        if lines.next() != Some("---") {
            return Err(bad("missing separator"));
        }
        let mut pairs = Vec::new();
        for line in lines {
            let (l, m) = line.split_once(' ').ok_or_else(|| bad("malformed row"))?;
            let l: f64 = l.parse().map_err(|_| bad("bad eigenvalue"))?;
            let m: u32 = m.parse().map_err(|_| bad("bad multiplicity"))?;
            pairs.push((l, m));
        }
        let spectrum = Spectrum::from_entries(&pairs, lambda_max, &fingerprint);
        let entry = CacheEntry {
            fingerprint,
            lambda_max,
            generator,
            entries: spectrum.entries.len(),
            path: path.to_path_buf(),
        };
        Ok((entry, spectrum))
    }

    /// Cached spectrum covering at least `lambda_max`, truncated to it.
    pub fn load(&self, fingerprint: &str, lambda_max: f64) -> Result<Option<Spectrum>, SpectrumError> {
        let path = self.path_for(fingerprint);
        if !path.exists() {
            return Ok(None);
        }
        let (entry, spectrum) = Self::read(&path)?;
        if entry.lambda_max < lambda_max || entry.generator != GENERATOR_VERSION {
            return Ok(None);
        }
        Ok(Some(spectrum.truncated(lambda_max)))
    }

    /// Loads from the cache or computes and stores.
    pub fn get_or_compute<F>(&self, fingerprint: &str, lambda_max: f64, compute: F) -> Result<Spectrum, SpectrumError>
    where
        F: FnOnce() -> Result<Spectrum, SpectrumError>,
    {
        if let Some(s) = self.load(fingerprint, lambda_max)? {
            return Ok(s);
        }
        let s = compute()?;
        self.store(&s)?;
        Ok(s)
    }

    /// All cache files, sorted by fingerprint.
    pub fn list(&self) -> Result<Vec<CacheEntry>, SpectrumError> {
        if !self.dir.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for item in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let path = item.map_err(io_err(&self.dir))?.path();
            if path.extension().and_then(|e| e.to_str()) == Some(EXT) {
                out.push(Self::read(&path)?.0);
            }
        }
        out.sort_by(|a, b| a.fingerprint.cmp(&b.fingerprint));
        Ok(out)
    }

    /// Removes all cache files; returns how many were deleted.
    pub fn clear(&self) -> Result<usize, SpectrumError> {
        if !self.dir.exists() {
            return Ok(0);
        }
        let mut n = 0;
        for item in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let path = item.map_err(io_err(&self.dir))?.path();
            if path.extension().and_then(|e| e.to_str()) == Some(EXT) {
                fs::remove_file(&path).map_err(io_err(&path))?;
                n += 1;
            }
        }
        Ok(n)
    }
}
