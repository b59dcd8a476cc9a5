//! Corpus loading through the per-video histogram cache.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use bgsfuse::corpus::load_corpus;
use bgsfuse::histogram::{histogram_for_video, read_cache_file, write_cache_file};
use bgsfuse::{Corpus, HistogramSet, LabelMap, LoadOptions, PatternHistogram, VideoKey, VideoRef};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{io_error, CliError};

const STAMP_FILE: &str = "labels.json";

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct IngestStats {
    pub written: usize,
    pub fresh: usize,
    pub rebuilt: usize,
}

pub struct Loaded {
    pub corpus: Corpus,
    pub set: HistogramSet,
    pub stats: IngestStats,
}

pub fn cache_dir(out: &Path) -> PathBuf {
    out.join("cache")
}

pub fn cache_path(cache: &Path, key: &VideoKey) -> PathBuf {
    cache.join(&key.category).join(format!("{}.phis", key.video))
}

pub fn open_corpus(cfg: &RunConfig) -> Result<Corpus, CliError> {
    let options = LoadOptions {
        label_map: LabelMap::cdnet().with_overrides(&cfg.label_overrides),
        learning_set: cfg.learning_set,
    };
    Ok(load_corpus(cfg.corpus_root()?, &options)?)
}

/// Loads the corpus and its histograms, refreshing stale caches.
pub fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    let corpus = open_corpus(cfg)?;
    let (set, stats) = ingest(&corpus, &cache_dir(&cfg.out))?;
    Ok(Loaded { corpus, set, stats })
}

enum Status {
    Fresh,
    Written,
    Rebuilt(String),
}

pub fn ingest(corpus: &Corpus, cache: &Path) -> Result<(HistogramSet, IngestStats), CliError> {
    fs::create_dir_all(cache).map_err(|e| io_error(cache, e))?;
    let stamp = label_stamp(corpus.label_map());
    let stamp_path = cache.join(STAMP_FILE);
    let stamp_matches = fs::read_to_string(&stamp_path).is_ok_and(|s| s == stamp);
    if !stamp_matches {
        for c in corpus.categories() {
            let dir = cache.join(&c.name);
            if dir.exists() {
                fs::remove_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
            }
        }
    }
    let refs: Vec<&VideoRef> = corpus.videos().collect();
    let results = refs
        .par_iter()
        .map(|v| load_one(corpus, cache, v))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut stats = IngestStats::default();
    let mut hists = BTreeMap::new();
    for (v, (hist, status)) in refs.iter().zip(results) {
        match status {
            Status::Fresh => stats.fresh += 1,
            Status::Written => stats.written += 1,
            Status::Rebuilt(reason) => {
                eprintln!("warning: rebuilding cache for {}: {reason}", v.key);
                stats.rebuilt += 1;
            }
        }
        hists.insert(v.key.clone(), hist);
    }
    fs::write(&stamp_path, stamp).map_err(|e| io_error(&stamp_path, e))?;
    Ok((HistogramSet::new(hists, corpus)?, stats))
}

fn load_one(corpus: &Corpus, cache: &Path, video: &VideoRef) -> Result<(PatternHistogram, Status), CliError> {
    let path = cache_path(cache, &video.key);
    let mut status = Status::Written;
    if path.exists() {
        match read_cache_file(&path) {
            Ok((names, hist)) if names == corpus.algorithms() => {
                if is_fresh(&path, &corpus.video_dir(&video.key))? {
                    return Ok((hist, Status::Fresh));
                }
                status = Status::Rebuilt("inputs changed".into());
            }
            Ok(_) => status = Status::Rebuilt("algorithm list changed".into()),
            Err(e) => status = Status::Rebuilt(format!("corrupt cache ({e})")),
        }
    }
    let hist = histogram_for_video(corpus, video)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    write_cache_file(&path, &hist, corpus.algorithms())?;
    Ok((hist, status))
}

/// The cache is at least as new as every file under the video directory.
fn is_fresh(cache: &Path, video_dir: &Path) -> Result<bool, CliError> {
    let cached = modified(cache)?;
    Ok(newest(video_dir)?.is_none_or(|t| t <= cached))
}

fn modified(path: &Path) -> Result<SystemTime, CliError> {
    fs::metadata(path)
        .and_then(|m| m.modified())
        .map_err(|e| io_error(path, e))
}

fn newest(dir: &Path) -> Result<Option<SystemTime>, CliError> {
    let mut best = None;
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| io_error(&d, e))? {
            let entry = entry.map_err(|e| io_error(&d, e))?;
            let path = entry.path();
            let meta = entry.metadata().map_err(|e| io_error(&path, e))?;
            if meta.is_dir() {
                stack.push(path);
            } else {
                let t = meta.modified().map_err(|e| io_error(&path, e))?;
                best = Some(best.map_or(t, |b: SystemTime| b.max(t)));
            }
        }
    }
    Ok(best)
}

fn label_stamp(map: &LabelMap) -> String {
    let entries: BTreeMap<u8, bgsfuse::Label> = (0..=255u8).filter_map(|g| map.get(g).map(|l| (g, l))).collect();
    serde_json::to_string(&entries).expect("label map serializes")
}
