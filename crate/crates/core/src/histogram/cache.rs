//! `PHIS` histogram cache files.
//!
//! Little-endian layout:
//!
//! ```text
//! magic    4 bytes  "PHIS"
//! version  u32      1
//! n        u32      algorithm count
//! names    n x (u32 byte length, UTF-8 bytes)
//! count    u64      number of entries
//! entries  count x (pattern u32, fg u64, bg u64), strictly increasing pattern
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{PatternCount, PatternHistogram, MAX_ALGORITHMS};

pub const CACHE_MAGIC: &[u8; 4] = b"PHIS";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a histogram cache (bad magic)")]
    BadMagic,
    #[error("unsupported cache version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt cache: {0}")]
    Corrupt(String),
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn write_cache(w: &mut impl Write, hist: &PatternHistogram, names: &[String]) -> Result<(), CacheError> {
    if names.len() != hist.n() {
        return Err(CacheError::Corrupt(format!(
            "{} names for a histogram of {} algorithms",
            names.len(),
            hist.n()
        )));
    }
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(hist.n() as u32).to_le_bytes())?;
    for name in names {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    w.write_all(&(hist.entries().len() as u64).to_le_bytes())?;
    for e in hist.entries() {
        w.write_all(&e.pattern.to_le_bytes())?;
        w.write_all(&e.fg.to_le_bytes())?;
        w.write_all(&e.bg.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_cache(r: &mut impl Read) -> Result<(Vec<String>, PatternHistogram), CacheError> {
    let truncated = |e: io::Error| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            CacheError::Corrupt("truncated".into())
        } else {
            CacheError::Io(e)
        }
    };
    let mut magic = [0; 4];
    r.read_exact(&mut magic).map_err(|_| CacheError::BadMagic)?;
    if &magic != CACHE_MAGIC {
        return Err(CacheError::BadMagic);
    }
    let version = read_u32(r).map_err(truncated)?;
    if version != CACHE_VERSION {
        return Err(CacheError::UnsupportedVersion(version));
    }
    let n = read_u32(r).map_err(truncated)? as usize;
    if n > MAX_ALGORITHMS {
        return Err(CacheError::Corrupt(format!("{n} algorithms")));
    }
    let mut names = Vec::with_capacity(n);
    for _ in 0..n {
        let len = read_u32(r).map_err(truncated)? as usize;
        if len > 4096 {
            return Err(CacheError::Corrupt("algorithm name too long".into()));
        }
        let mut buf = vec![0; len];
        r.read_exact(&mut buf).map_err(truncated)?;
        names.push(String::from_utf8(buf).map_err(|_| CacheError::Corrupt("name is not UTF-8".into()))?);
    }
    let count = read_u64(r).map_err(truncated)?;
    if count > 1u64 << n {
        return Err(CacheError::Corrupt(format!("{count} entries for {n} algorithms")));
    }
    let mut entries = Vec::with_capacity(count as usize);
    let mut previous: Option<u32> = None;
    for _ in 0..count {
        let pattern = read_u32(r).map_err(truncated)?;
        let fg = read_u64(r).map_err(truncated)?;
        let bg = read_u64(r).map_err(truncated)?;
        if u64::from(pattern) >= 1u64 << n {
            return Err(CacheError::Corrupt(format!("pattern {pattern:#x} out of range")));
        }
        if previous.is_some_and(|p| p >= pattern) {
            return Err(CacheError::Corrupt("entries not strictly sorted".into()));
        }
        if fg + bg == 0 {
            return Err(CacheError::Corrupt("empty entry".into()));
        }
        previous = Some(pattern);
        entries.push(PatternCount { pattern, fg, bg });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(CacheError::Corrupt("trailing bytes".into()));
    }
    Ok((names, PatternHistogram::from_sorted(n, entries)))
}

pub fn write_cache_file(path: &Path, hist: &PatternHistogram, names: &[String]) -> Result<(), CacheError> {
    let mut buf = Vec::new();
    write_cache(&mut buf, hist, names)?;
    // write-then-rename so an interrupted run never leaves a half file
    let tmp = path.with_extension("phis.tmp");
    fs::write(&tmp, &buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_cache_file(path: &Path) -> Result<(Vec<String>, PatternHistogram), CacheError> {
    let bytes = fs::read(path)?;
    read_cache(&mut bytes.as_slice())
}
