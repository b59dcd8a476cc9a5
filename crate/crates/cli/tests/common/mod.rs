#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bgsfuse::corpus::{
    encode_groundtruth, encode_mask, groundtruth_path, mask_path, synthesize_in_memory, BinaryMask, CategorySpec,
    DetectorSpec, GtMask, SyntheticSpec, VideoFrames, MANIFEST_FILE,
};
use bgsfuse::histogram::build_histogram;
use bgsfuse::{Corpus, HistogramSet, Label, PatternHistogram, VideoKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bgsfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgsfuse"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub struct Synthetic {
    pub corpus: Corpus,
    pub frames: Vec<VideoFrames>,
    pub set: HistogramSet,
}

pub fn random_spec(seed: u64, n: usize, categories: usize, videos: usize, side: usize) -> SyntheticSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xacce);
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

/// One video written by hand: ground truth and one mask per algorithm, one frame each.
pub struct HandVideo<'a> {
    pub category: &'a str,
    pub video: &'a str,
    pub labels: Vec<Label>,
    pub masks: Vec<Vec<bool>>,
}

pub fn write_corpus(root: &Path, algorithms: &[&str], videos: &[HandVideo]) {
    fs::create_dir_all(root).unwrap();
    let manifest = serde_json::json!({ "algorithms": algorithms });
    fs::write(root.join(MANIFEST_FILE), manifest.to_string()).unwrap();
    for v in videos {
        let dir = root.join(v.category).join(v.video);
        let width = v.labels.len();
        let gt = GtMask {
            width,
            height: 1,
            labels: v.labels.clone(),
        };
        let gt_path = groundtruth_path(&dir, 1);
        fs::create_dir_all(gt_path.parent().unwrap()).unwrap();
        fs::write(gt_path, encode_groundtruth(&gt)).unwrap();
        for (name, bits) in algorithms.iter().zip(&v.masks) {
            let p = mask_path(&dir, name, 1);
            fs::create_dir_all(p.parent().unwrap()).unwrap();
            let mask = BinaryMask::from_bits(width, 1, bits.iter().copied());
            fs::write(p, encode_mask(&mask)).unwrap();
        }
    }
}

/// A single-algorithm video with the given confusion counts.
pub fn counted_video<'a>(
    category: &'a str,
    video: &'a str,
    tp: usize,
    fp: usize,
    fn_: usize,
    tn: usize,
) -> HandVideo<'a> {
    let mut labels = Vec::new();
    let mut mask = Vec::new();
    for (label, fg, count) in [
        (Label::Fg, true, tp),
        (Label::Bg, true, fp),
        (Label::Fg, false, fn_),
        (Label::Bg, false, tn),
    ] {
        labels.extend(std::iter::repeat_n(label, count));
        mask.extend(std::iter::repeat_n(fg, count));
    }
    HandVideo {
        category,
        video,
        labels,
        masks: vec![mask],
    }
}

/// Row of a metrics report whose first two columns are `category,video`.
pub fn report_row(csv: &str, category: &str, video: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .find(|cols| cols[0] == category && cols[1] == video)
        .unwrap_or_else(|| panic!("no row {category},{video} in\n{csv}"))
}
