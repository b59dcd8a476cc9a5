use bgsfuse::corpus::{generate_synthetic, CategorySpec, DetectorSpec, SyntheticSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub algorithms: usize,
    pub categories: usize,
    pub videos: usize,
    pub frames: usize,
    pub size: usize,
    pub correlation: f64,
    pub fg_prior: f64,
}

/// Synthetic corpus description from the config file, or drawn from `seed` with the given shape.
pub fn spec_for(cfg: &RunConfig, args: &SynthArgs) -> SyntheticSpec {
    if let Some(spec) = &cfg.synthetic {
        return spec.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let detectors = (0..args.algorithms)
        .map(|_| DetectorSpec {
            name: None,
            tpr: rng.random_range(0.55..0.95),
            fpr: rng.random_range(0.01..0.25),
        })
        .collect();
    let categories = (0..args.categories)
        .map(|c| CategorySpec {
            videos: args.videos,
            // unequal lengths give every category a unique learning member
            frames: args.frames + c % 2,
            width: args.size,
            height: args.size,
        })
        .collect();
    SyntheticSpec {
        detectors,
        categories,
        correlation: args.correlation,
        fg_prior: args.fg_prior,
        ignore_prior: 0.02,
        seed: cfg.seed,
    }
}

pub fn run(cfg: &RunConfig, args: &SynthArgs) -> Result<String, CliError> {
    let spec = spec_for(cfg, args);
    let corpus = generate_synthetic(&spec, &cfg.out)?;
    Ok(format!(
        "synth: {} videos in {} categories, {} algorithms, written to {}\n",
        corpus.video_count(),
        corpus.categories().len(),
        corpus.algorithms().len(),
        cfg.out.display()
    ))
}
