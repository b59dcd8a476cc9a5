//! Seeded synthetic corpora.
//!
//! Every pixel draws from a ChaCha8 stream: the stream is seeded with
//! `seed` and selected by the global video index (`ChaCha8Rng::set_stream`),
//! so videos can be generated in any order or in parallel. Inside a video the
//! draws are consumed frame by frame, pixel by pixel, and per pixel in this
//! order: the ground-truth draw, the latent difficulty `u`, then one draw per
//! algorithm in manifest order. Each draw is one `f64` in `[0, 1)`.
//!
//! With correlation `rho`, algorithm `j` with draw `d` is correct when
//! `u < acc_j` if `d < rho`, and when `(d - rho) / (1 - rho) < acc_j`
//! otherwise. `acc_j` is the TPR on foreground pixels and `1 - FPR` on
//! background pixels, so the marginal rates do not depend on `rho`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    encode_groundtruth, encode_mask, groundtruth_path, load_corpus, mask_path, select_learning_member, BinaryMask,
    Category, Corpus, CorpusError, GtMask, Label, LabelMap, LoadOptions, Manifest, VideoKey, VideoRef, MANIFEST_FILE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub videos: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub detectors: Vec<DetectorSpec>,
    pub categories: Vec<CategorySpec>,
    #[serde(default)]
    pub correlation: f64,
    pub fg_prior: f64,
    /// Fraction of pixels labelled IGNORE (taken before the FG draw).
    #[serde(default)]
    pub ignore_prior: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn n_algorithms(&self) -> usize {
        self.detectors.len()
    }

    pub fn algorithm_names(&self) -> Vec<String> {
        self.detectors
            .iter()
            .enumerate()
            .map(|(j, d)| d.name.clone().unwrap_or_else(|| format!("algo{j:02}")))
            .collect()
    }

    pub fn category_name(index: usize) -> String {
        format!("category{index:02}")
    }

    pub fn video_name(index: usize) -> String {
        format!("video{index:02}")
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::InvalidSpec(msg));
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if self.detectors.is_empty() {
            return bad("at least one detector is required".into());
        }
        if self.detectors.len() > crate::histogram::MAX_ALGORITHMS {
            return bad(format!("at most {} detectors", crate::histogram::MAX_ALGORITHMS));
        }
        for (j, d) in self.detectors.iter().enumerate() {
            if !unit(d.tpr) || !unit(d.fpr) {
                return bad(format!("detector {j}: tpr/fpr must lie in [0, 1]"));
            }
        }
        let names = self.algorithm_names();
        let unique: std::collections::BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return bad("detector names must be distinct".into());
        }
        if self.categories.is_empty() {
            return bad("at least one category is required".into());
        }
        for (i, c) in self.categories.iter().enumerate() {
            if c.videos == 0 || c.frames == 0 || c.width == 0 || c.height == 0 {
                return bad(format!("category {i}: counts and dimensions must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return bad("correlation must lie in [0, 1)".into());
        }
        if !unit(self.fg_prior) || !unit(self.ignore_prior) || self.fg_prior + self.ignore_prior > 1.0 {
            return bad("fg_prior and ignore_prior must be probabilities summing to at most 1".into());
        }
        Ok(())
    }
}

/// Ground truth and one mask stream per detector, `masks[algorithm][frame]`.
pub type VideoFrames = (Vec<GtMask>, Vec<Vec<BinaryMask>>);

/// Generates video number `video_index` (global, in category-major order) of
/// category `category`, in memory.
pub fn synthesize_video(spec: &SyntheticSpec, category: usize, video_index: u64) -> VideoFrames {
    let cat = &spec.categories[category];
    let n = spec.n_algorithms();
    let pixels = cat.width * cat.height;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(video_index);

    let rho = spec.correlation;
    let mut gts = Vec::with_capacity(cat.frames);
    let mut masks: Vec<Vec<BinaryMask>> = (0..n).map(|_| Vec::with_capacity(cat.frames)).collect();
    for _ in 0..cat.frames {
        let mut labels = Vec::with_capacity(pixels);
        let mut frame_masks: Vec<BinaryMask> = (0..n).map(|_| BinaryMask::new(cat.width, cat.height)).collect();
        for pixel in 0..pixels {
            let r: f64 = rng.random();
            let label = if r < spec.ignore_prior {
                Label::Ignore
            } else if r < spec.ignore_prior + spec.fg_prior {
                Label::Fg
            } else {
                Label::Bg
            };
            let u: f64 = rng.random();
            // IGNORE pixels are scored like background by the detectors
            let truth = label == Label::Fg;
            for (j, detector) in spec.detectors.iter().enumerate() {
                let acc = if truth { detector.tpr } else { 1.0 - detector.fpr };
                // with probability rho the shared difficulty decides, otherwise
                // the rescaled remainder of the same draw does; both keep P(correct) = acc
                let draw: f64 = rng.random();
                let correct = if draw < rho {
                    u < acc
                } else {
                    (draw - rho) / (1.0 - rho) < acc
                };
                if correct == truth {
                    frame_masks[j].set(pixel, true);
                }
            }
            labels.push(label);
        }
        gts.push(GtMask {
            width: cat.width,
            height: cat.height,
            labels,
        });
        for (j, m) in frame_masks.into_iter().enumerate() {
            masks[j].push(m);
        }
    }
    (gts, masks)
}

/// Writes a full corpus tree under `out` and indexes it.
pub fn generate_synthetic(spec: &SyntheticSpec, out: &Path) -> Result<Corpus, CorpusError> {
    spec.validate()?;
    let names = spec.algorithm_names();
    let mut jobs = Vec::new();
    let mut global = 0u64;
    for (c, cat) in spec.categories.iter().enumerate() {
        for v in 0..cat.videos {
            jobs.push((c, v, global));
            global += 1;
        }
    }
    fs::create_dir_all(out).map_err(|e| CorpusError::io(out, e))?;
    jobs.par_iter().try_for_each(|&(c, v, global)| {
        let dir = out
            .join(SyntheticSpec::category_name(c))
            .join(SyntheticSpec::video_name(v));
        let (gts, masks) = synthesize_video(spec, c, global);
        write_video(&dir, &names, &gts, &masks)
    })?;
    let manifest = Manifest { algorithms: names };
    let path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| CorpusError::io(&path, e))?;
    load_corpus(out, &LoadOptions::default())
}

/// Generates a corpus without touching the disk. The index has an empty
/// root; frames are returned in the order of [`Corpus::videos`].
pub fn synthesize_in_memory(spec: &SyntheticSpec) -> Result<(Corpus, Vec<VideoFrames>), CorpusError> {
    spec.validate()?;
    let mut jobs = Vec::new();
    let mut categories = Vec::new();
    let mut global = 0u64;
    for (c, cat) in spec.categories.iter().enumerate() {
        let name = SyntheticSpec::category_name(c);
        let listing: Vec<(String, usize)> = (0..cat.videos)
            .map(|v| (SyntheticSpec::video_name(v), cat.frames))
            .collect();
        let ls = select_learning_member(&listing);
        let videos = (0..cat.videos)
            .map(|v| {
                jobs.push((c, global));
                global += 1;
                VideoRef {
                    key: VideoKey::new(name.clone(), SyntheticSpec::video_name(v)),
                    frame_count: cat.frames,
                    width: cat.width,
                    height: cat.height,
                    learning_member: ls == Some(v),
                }
            })
            .collect();
        categories.push(Category { name, videos });
    }
    let frames = jobs.par_iter().map(|&(c, g)| synthesize_video(spec, c, g)).collect();
    let corpus = Corpus::from_parts("", spec.algorithm_names(), categories, LabelMap::default());
    Ok((corpus, frames))
}

fn write_video(dir: &Path, names: &[String], gts: &[GtMask], masks: &[Vec<BinaryMask>]) -> Result<(), CorpusError> {
    let gt_dir = dir.join("groundtruth");
    fs::create_dir_all(&gt_dir).map_err(|e| CorpusError::io(&gt_dir, e))?;
    for (f, gt) in gts.iter().enumerate() {
        let path = groundtruth_path(dir, f + 1);
        fs::write(&path, encode_groundtruth(gt)).map_err(|e| CorpusError::io(&path, e))?;
    }
    for (name, stream) in names.iter().zip(masks) {
        let algo_dir = dir.join("algorithms").join(name);
        fs::create_dir_all(&algo_dir).map_err(|e| CorpusError::io(&algo_dir, e))?;
        for (f, mask) in stream.iter().enumerate() {
            let path = mask_path(dir, name, f + 1);
            fs::write(&path, encode_mask(mask)).map_err(|e| CorpusError::io(&path, e))?;
        }
    }
    Ok(())
}
