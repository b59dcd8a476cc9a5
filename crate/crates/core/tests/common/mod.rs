#![allow(dead_code)]

use std::collections::BTreeMap;

use bgsfuse::corpus::{synthesize_in_memory, CategorySpec, DetectorSpec, SyntheticSpec, VideoFrames};
use bgsfuse::histogram::build_histogram;
use bgsfuse::metrics::{aggregate, rates};
use bgsfuse::{ConfusionCounts, Corpus, HistogramSet, Label, PatternHistogram, Rates, VideoKey, WeightedPerf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Synthetic {
    pub corpus: Corpus,
    pub frames: Vec<VideoFrames>,
    pub set: HistogramSet,
}

pub fn random_spec(seed: u64, n: usize, categories: usize, videos: usize, side: usize) -> SyntheticSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let detectors = (0..n)
        .map(|_| DetectorSpec {
            name: None,
            tpr: rng.random_range(0.5..0.95),
            fpr: rng.random_range(0.01..0.3),
        })
        .collect();
    let categories = (0..categories)
        .map(|c| CategorySpec {
            videos,
            frames: 1 + c % 2,
            width: side,
            height: side,
        })
        .collect();
    SyntheticSpec {
        detectors,
        categories,
        correlation: rng.random_range(0.0..0.5),
        fg_prior: rng.random_range(0.1..0.4),
        ignore_prior: 0.05,
        seed,
    }
}

pub fn build(spec: &SyntheticSpec) -> Synthetic {
    let (corpus, frames) = synthesize_in_memory(spec).unwrap();
    let hists: BTreeMap<VideoKey, PatternHistogram> = corpus
        .videos()
        .zip(&frames)
        .map(|(v, (gts, masks))| (v.key.clone(), build_histogram(gts, masks).unwrap()))
        .collect();
    let set = HistogramSet::new(hists, &corpus).unwrap();
    Synthetic { corpus, frames, set }
}

/// Confusion counts of a deterministic combiner by scanning every pixel.
pub fn pixel_confusion(frames: &VideoFrames, fg: impl Fn(u32) -> bool) -> ConfusionCounts {
    let (gts, masks) = frames;
    let mut c = ConfusionCounts::default();
    for (f, gt) in gts.iter().enumerate() {
        for (i, &label) in gt.labels.iter().enumerate() {
            if label == Label::Ignore {
                continue;
            }
            let pattern = masks
                .iter()
                .enumerate()
                .fold(0u32, |acc, (j, m)| acc | (m[f].get(i) as u32) << j);
            match (label == Label::Fg, fg(pattern)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    c
}

/// Weighted performance of a deterministic combiner from a pixel scan.
pub fn pixel_perf(s: &Synthetic, fg: impl Fn(u32) -> bool + Copy) -> WeightedPerf {
    let per: BTreeMap<VideoKey, Rates> = s
        .corpus
        .videos()
        .zip(&s.frames)
        .map(|(v, frames)| (v.key.clone(), rates(&pixel_confusion(frames, fg))))
        .collect();
    aggregate(&per, &s.corpus).unwrap()
}
