//! Mask corpora on disk.
//!
//! Layout:
//!
//! ```text
//! <root>/corpus.json                                   {"algorithms": [...]}
//! <root>/<category>/<video>/groundtruth/gt000001.pgm
//! <root>/<category>/<video>/algorithms/<algo>/bin000001.pgm
//! ```
//!
//! The manifest order of algorithms is canonical: algorithm `j` owns bit `j`
//! of every joint pattern downstream.

mod pnm;
mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pnm::{
    decode_groundtruth, decode_header, decode_mask, encode_groundtruth, encode_mask, encode_pgm, BinaryMask,
    DecodeError, GtMask, PnmHeader, PnmKind,
};
pub use synthetic::{
    generate_synthetic, synthesize_in_memory, synthesize_video, CategorySpec, DetectorSpec, SyntheticSpec, VideoFrames,
};

pub const MANIFEST_FILE: &str = "corpus.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing directory {path}")]
    MissingDirectory { path: PathBuf },
    #[error("invalid manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("malformed layout at {path}: {reason}")]
    Layout { path: PathBuf, reason: String },
    #[error("missing frame {path}")]
    MissingFrame { path: PathBuf },
    #[error("video {video}: algorithm {algorithm} has {found} frames, ground truth has {expected}")]
    FrameCountMismatch {
        video: String,
        algorithm: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: dimensions {found:?} differ from {expected:?}")]
    DimensionMismatch {
        path: PathBuf,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("cannot decode {path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: DecodeError,
    },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bg,
    Fg,
    Ignore,
}

/// Gray value to label, one slot per byte value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    slots: [Option<Label>; 256],
}

impl LabelMap {
    pub fn empty() -> Self {
        Self { slots: [None; 256] }
    }

    /// CDnet 2014: 0 static, 50 hard shadow, 85 outside ROI, 170 unknown motion, 255 motion.
    pub fn cdnet() -> Self {
        Self::empty()
            .with(0, Label::Bg)
            .with(50, Label::Bg)
            .with(85, Label::Ignore)
            .with(170, Label::Ignore)
            .with(255, Label::Fg)
    }

    pub fn with(mut self, gray: u8, label: Label) -> Self {
        self.slots[gray as usize] = Some(label);
        self
    }

    pub fn without(mut self, gray: u8) -> Self {
        self.slots[gray as usize] = None;
        self
    }

    pub fn get(&self, gray: u8) -> Option<Label> {
        self.slots[gray as usize]
    }

    /// Applies overrides on top of `self`; `None` removes a mapping.
    pub fn with_overrides(mut self, overrides: &BTreeMap<u8, Option<Label>>) -> Self {
        for (&gray, &label) in overrides {
            self.slots[gray as usize] = label;
        }
        self
    }
}

impl Default for LabelMap {
    fn default() -> Self {
        Self::cdnet()
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub label_map: LabelMap,
    /// Mark the shortest video of each category as a learning-set member.
    pub learning_set: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            label_map: LabelMap::default(),
            learning_set: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VideoKey {
    pub category: String,
    pub video: String,
}

impl VideoKey {
    pub fn new(category: impl Into<String>, video: impl Into<String>) -> Self {
        Self {
            category: category.into(),
            video: video.into(),
        }
    }
}

impl fmt::Display for VideoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.category, self.video)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoRef {
    pub key: VideoKey,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub learning_member: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub name: String,
    pub videos: Vec<VideoRef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub algorithms: Vec<String>,
}

/// Index of a corpus. Pixel data is read on demand.
#[derive(Debug, Clone)]
pub struct Corpus {
    root: PathBuf,
    algorithms: Vec<String>,
    categories: Vec<Category>,
    label_map: LabelMap,
}

impl Corpus {
    /// Builds an index from already-known parts, e.g. for in-memory tests.
    /// Categories and videos are sorted lexicographically.
    pub fn from_parts(
        root: impl Into<PathBuf>,
        algorithms: Vec<String>,
        mut categories: Vec<Category>,
        label_map: LabelMap,
    ) -> Self {
        categories.sort_by(|a, b| a.name.cmp(&b.name));
        for c in &mut categories {
            c.videos.sort_by(|a, b| a.key.cmp(&b.key));
        }
        Self {
            root: root.into(),
            algorithms,
            categories,
            label_map,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn algorithm_index(&self, name: &str) -> Option<usize> {
        self.algorithms.iter().position(|a| a == name)
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.label_map
    }

    /// All videos, categories then videos in lexicographic order.
    pub fn videos(&self) -> impl Iterator<Item = &VideoRef> {
        self.categories.iter().flat_map(|c| c.videos.iter())
    }

    pub fn video_count(&self) -> usize {
        self.categories.iter().map(|c| c.videos.len()).sum()
    }

    pub fn video(&self, key: &VideoKey) -> Option<&VideoRef> {
        self.videos().find(|v| &v.key == key)
    }

    pub fn learning_videos(&self) -> impl Iterator<Item = &VideoRef> {
        self.videos().filter(|v| v.learning_member)
    }

    pub fn video_dir(&self, key: &VideoKey) -> PathBuf {
        self.root.join(&key.category).join(&key.video)
    }

    pub fn groundtruth_path(&self, key: &VideoKey, frame: usize) -> PathBuf {
        groundtruth_path(&self.video_dir(key), frame)
    }

    pub fn mask_path(&self, key: &VideoKey, algorithm: usize, frame: usize) -> PathBuf {
        mask_path(&self.video_dir(key), &self.algorithms[algorithm], frame)
    }

    pub fn read_groundtruth(&self, video: &VideoRef, frame: usize) -> Result<GtMask, CorpusError> {
        let path = self.groundtruth_path(&video.key, frame);
        let bytes = fs::read(&path).map_err(|e| CorpusError::io(&path, e))?;
        let gt = decode_groundtruth(&bytes, &self.label_map).map_err(|source| CorpusError::Decode {
            path: path.clone(),
            source,
        })?;
        check_dims(&path, video, gt.width, gt.height)?;
        Ok(gt)
    }

    pub fn read_mask(&self, video: &VideoRef, algorithm: usize, frame: usize) -> Result<BinaryMask, CorpusError> {
        let path = self.mask_path(&video.key, algorithm, frame);
        let bytes = fs::read(&path).map_err(|e| CorpusError::io(&path, e))?;
        let mask = decode_mask(&bytes).map_err(|source| CorpusError::Decode {
            path: path.clone(),
            source,
        })?;
        check_dims(&path, video, mask.width(), mask.height())?;
        Ok(mask)
    }
}

fn check_dims(path: &Path, video: &VideoRef, width: usize, height: usize) -> Result<(), CorpusError> {
    if (width, height) != (video.width, video.height) {
        return Err(CorpusError::DimensionMismatch {
            path: path.to_path_buf(),
            expected: (video.width, video.height),
            found: (width, height),
        });
    }
    Ok(())
}

pub fn groundtruth_path(video_dir: &Path, frame: usize) -> PathBuf {
    video_dir.join("groundtruth").join(format!("gt{frame:06}.pgm"))
}

pub fn mask_path(video_dir: &Path, algorithm: &str, frame: usize) -> PathBuf {
    video_dir
        .join("algorithms")
        .join(algorithm)
        .join(format!("bin{frame:06}.pgm"))
}

/// Index of the learning-set member among `(name, frame_count)` pairs: the
/// fewest frames, ties to the lexicographically smallest name.
pub fn select_learning_member<S: AsRef<str>>(videos: &[(S, usize)]) -> Option<usize> {
    videos
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.cmp(&b.1).then_with(|| a.0.as_ref().cmp(b.0.as_ref())))
        .map(|(i, _)| i)
}

fn sorted_subdirs(path: &Path) -> Result<Vec<(String, PathBuf)>, CorpusError> {
    if !path.is_dir() {
        return Err(CorpusError::MissingDirectory {
            path: path.to_path_buf(),
        });
    }
    let mut dirs = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| CorpusError::io(path, e))? {
        let entry = entry.map_err(|e| CorpusError::io(path, e))?;
        let p = entry.path();
        if p.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if !name.starts_with('.') {
                dirs.push((name, p));
            }
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Frame numbers of files named `<prefix>NNNNNN.pgm` in `dir`.
fn frame_numbers(dir: &Path, prefix: &str) -> Result<BTreeSet<usize>, CorpusError> {
    if !dir.is_dir() {
        return Err(CorpusError::MissingDirectory {
            path: dir.to_path_buf(),
        });
    }
    let mut frames = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(|e| CorpusError::io(dir, e))? {
        let entry = entry.map_err(|e| CorpusError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(digits) = name.strip_prefix(prefix).and_then(|r| r.strip_suffix(".pgm")) else {
            continue;
        };
        if digits.len() == 6 && digits.bytes().all(|b| b.is_ascii_digit()) {
            frames.insert(digits.parse::<usize>().expect("six ascii digits"));
        }
    }
    Ok(frames)
}

fn first_missing(frames: &BTreeSet<usize>, count: usize) -> Option<usize> {
    (1..=count).find(|f| !frames.contains(f))
}

pub fn read_manifest(root: &Path) -> Result<Manifest, CorpusError> {
    let path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CorpusError::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CorpusError::Manifest {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    if manifest.algorithms.is_empty() {
        return Err(CorpusError::Manifest {
            path,
            reason: "no algorithms listed".into(),
        });
    }
    let unique: BTreeSet<&String> = manifest.algorithms.iter().collect();
    if unique.len() != manifest.algorithms.len() {
        return Err(CorpusError::Manifest {
            path,
            reason: "duplicate algorithm name".into(),
        });
    }
    if manifest.algorithms.len() > crate::histogram::MAX_ALGORITHMS {
        return Err(CorpusError::Manifest {
            path,
            reason: format!("at most {} algorithms are supported", crate::histogram::MAX_ALGORITHMS),
        });
    }
    Ok(manifest)
}

/// Indexes a corpus tree. Only headers of the first ground-truth frame are
/// read; pixel payloads are left on disk.
pub fn load_corpus(root: &Path, options: &LoadOptions) -> Result<Corpus, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::MissingDirectory {
            path: root.to_path_buf(),
        });
    }
    let manifest = read_manifest(root)?;
    let mut categories = Vec::new();
    for (cat_name, cat_path) in sorted_subdirs(root)? {
        let mut videos = Vec::new();
        for (video_name, video_path) in sorted_subdirs(&cat_path)? {
            let key = VideoKey::new(cat_name.clone(), video_name);
            videos.push(index_video(&video_path, key, &manifest.algorithms)?);
        }
        if videos.is_empty() {
            return Err(CorpusError::Layout {
                path: cat_path,
                reason: "category has no videos".into(),
            });
        }
        if options.learning_set {
            let lengths: Vec<(&str, usize)> = videos.iter().map(|v| (v.key.video.as_str(), v.frame_count)).collect();
            let member = select_learning_member(&lengths).expect("non-empty category");
            videos[member].learning_member = true;
        }
        categories.push(Category { name: cat_name, videos });
    }
    if categories.is_empty() {
        return Err(CorpusError::Layout {
            path: root.to_path_buf(),
            reason: "no categories".into(),
        });
    }
    Ok(Corpus {
        root: root.to_path_buf(),
        algorithms: manifest.algorithms,
        categories,
        label_map: options.label_map.clone(),
    })
}

fn index_video(video_path: &Path, key: VideoKey, algorithms: &[String]) -> Result<VideoRef, CorpusError> {
    let gt_frames = frame_numbers(&video_path.join("groundtruth"), "gt")?;
    let frame_count = gt_frames.len();
    if frame_count == 0 {
        return Err(CorpusError::Layout {
            path: video_path.join("groundtruth"),
            reason: "no ground-truth frames".into(),
        });
    }
    if let Some(f) = first_missing(&gt_frames, frame_count) {
        return Err(CorpusError::MissingFrame {
            path: groundtruth_path(video_path, f),
        });
    }
    for algorithm in algorithms {
        let dir = video_path.join("algorithms").join(algorithm);
        let frames = frame_numbers(&dir, "bin")?;
        let contiguous = first_missing(&frames, frames.len()).is_none();
        if contiguous && frames.len() != frame_count {
            return Err(CorpusError::FrameCountMismatch {
                video: key.to_string(),
                algorithm: algorithm.clone(),
                expected: frame_count,
                found: frames.len(),
            });
        }
        if let Some(f) = first_missing(&frames, frame_count) {
            return Err(CorpusError::MissingFrame {
                path: mask_path(video_path, algorithm, f),
            });
        }
        if frames.len() != frame_count {
            return Err(CorpusError::FrameCountMismatch {
                video: key.to_string(),
                algorithm: algorithm.clone(),
                expected: frame_count,
                found: frames.len(),
            });
        }
    }
    let first = groundtruth_path(video_path, 1);
    let bytes = fs::read(&first).map_err(|e| CorpusError::io(&first, e))?;
    let header = decode_header(&bytes).map_err(|source| CorpusError::Decode {
        path: first.clone(),
        source,
    })?;
    Ok(VideoRef {
        key,
        frame_count,
        width: header.width,
        height: header.height,
        learning_member: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_video(root: &Path, cat: &str, video: &str, frames: usize, algorithms: &[&str]) {
        let dir = root.join(cat).join(video);
        fs::create_dir_all(dir.join("groundtruth")).unwrap();
        let pgm = encode_pgm(2, 2, &[0, 255, 0, 255]);
        for f in 1..=frames {
            fs::write(groundtruth_path(&dir, f), &pgm).unwrap();
            for a in algorithms {
                let p = mask_path(&dir, a, f);
                fs::create_dir_all(p.parent().unwrap()).unwrap();
                fs::write(p, &pgm).unwrap();
            }
        }
    }

    fn write_manifest(root: &Path, algorithms: &[&str]) {
        let m = Manifest {
            algorithms: algorithms.iter().map(|s| s.to_string()).collect(),
        };
        fs::write(root.join(MANIFEST_FILE), serde_json::to_string(&m).unwrap()).unwrap();
    }

    #[test]
    fn two_by_two_tree() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        write_manifest(root, &["b", "a"]);
        write_video(root, "zeta", "v2", 3, &["a", "b"]);
        write_video(root, "zeta", "v1", 5, &["a", "b"]);
        write_video(root, "alpha", "x", 4, &["a", "b"]);
        write_video(root, "alpha", "y", 2, &["a", "b"]);
        let corpus = load_corpus(root, &LoadOptions::default()).unwrap();
        assert_eq!(corpus.algorithms(), &["b".to_string(), "a".to_string()]);
        let names: Vec<String> = corpus.videos().map(|v| v.key.to_string()).collect();
        assert_eq!(names, vec!["alpha/x", "alpha/y", "zeta/v1", "zeta/v2"]);
        let ls: Vec<String> = corpus.learning_videos().map(|v| v.key.to_string()).collect();
        assert_eq!(ls, vec!["alpha/y", "zeta/v2"]);
        let v = corpus.videos().next().unwrap();
        assert_eq!((v.width, v.height, v.frame_count), (2, 2, 4));
    }

    #[test]
    fn single_video_is_learning_member() {
        let tmp = tempfile::tempdir().unwrap();
        write_manifest(tmp.path(), &["a"]);
        write_video(tmp.path(), "c", "v", 1, &["a"]);
        let corpus = load_corpus(tmp.path(), &LoadOptions::default()).unwrap();
        assert!(corpus.videos().next().unwrap().learning_member);
        let off = load_corpus(
            tmp.path(),
            &LoadOptions {
                learning_set: false,
                ..LoadOptions::default()
            },
        )
        .unwrap();
        assert_eq!(off.learning_videos().count(), 0);
    }

    #[test]
    fn missing_algorithm_frame_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        write_manifest(tmp.path(), &["a"]);
        write_video(tmp.path(), "c", "v", 5, &["a"]);
        let missing = mask_path(&tmp.path().join("c").join("v"), "a", 3);
        fs::remove_file(&missing).unwrap();
        let err = load_corpus(tmp.path(), &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("bin000003.pgm"), "{err}");
        assert!(matches!(err, CorpusError::MissingFrame { .. }));
    }

    #[test]
    fn frame_count_mismatch_names_video_and_algorithm() {
        let tmp = tempfile::tempdir().unwrap();
        write_manifest(tmp.path(), &["a"]);
        write_video(tmp.path(), "c", "v", 3, &["a"]);
        let extra = mask_path(&tmp.path().join("c").join("v"), "a", 4);
        fs::write(extra, encode_pgm(2, 2, &[0; 4])).unwrap();
        let err = load_corpus(tmp.path(), &LoadOptions::default()).unwrap_err();
        match &err {
            CorpusError::FrameCountMismatch { video, algorithm, .. } => {
                assert_eq!(video, "c/v");
                assert_eq!(algorithm, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_directories_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let err = load_corpus(&tmp.path().join("nope"), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, CorpusError::MissingDirectory { .. }));
        let err = load_corpus(tmp.path(), &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("corpus.json"));
        write_manifest(tmp.path(), &["a", "b"]);
        write_video(tmp.path(), "c", "v", 2, &["a"]);
        let err = load_corpus(tmp.path(), &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("algorithms/b"), "{err}");
    }

    #[test]
    fn reading_checks_dimensions() {
        let tmp = tempfile::tempdir().unwrap();
        write_manifest(tmp.path(), &["a"]);
        write_video(tmp.path(), "c", "v", 2, &["a"]);
        let p = mask_path(&tmp.path().join("c").join("v"), "a", 2);
        fs::write(&p, encode_pgm(1, 4, &[0; 4])).unwrap();
        let corpus = load_corpus(tmp.path(), &LoadOptions::default()).unwrap();
        let v = corpus.videos().next().unwrap().clone();
        assert!(corpus.read_mask(&v, 0, 1).is_ok());
        assert!(matches!(
            corpus.read_mask(&v, 0, 2),
            Err(CorpusError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn learning_member_tie_breaks_by_name() {
        assert_eq!(select_learning_member(&[("b", 3), ("a", 3), ("c", 4)]), Some(1));
        assert_eq!(select_learning_member::<&str>(&[]), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn learning_member_is_order_independent(
                lengths in proptest::collection::vec(1usize..5, 1..8),
                rotation in 0usize..8,
            ) {
                let videos: Vec<(String, usize)> =
                    lengths.iter().enumerate().map(|(i, &n)| (format!("v{i}"), n)).collect();
                let chosen = &videos[select_learning_member(&videos).unwrap()].0;
                let mut shuffled = videos.clone();
                shuffled.rotate_left(rotation % videos.len());
                shuffled.reverse();
                prop_assert_eq!(&shuffled[select_learning_member(&shuffled).unwrap()].0, chosen);
            }
        }
    }
}
