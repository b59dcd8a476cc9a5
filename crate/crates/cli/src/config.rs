use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bgsfuse::corpus::SyntheticSpec;
use bgsfuse::{Label, Strategy};
use serde::Deserialize;

use crate::error::CliError;

/// Published operating point drawn on top of the ROC plot.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePoint {
    pub name: String,
    pub fpr: f64,
    pub tpr: f64,
    #[serde(default)]
    pub f1: Option<f64>,
}

impl ReferencePoint {
    pub fn validate(&self) -> Result<(), CliError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.fpr) || !unit(self.tpr) || self.f1.is_some_and(|f| !unit(f)) {
            return Err(CliError::Config(format!(
                "reference point {:?} lies outside the unit square",
                self.name
            )));
        }
        Ok(())
    }

    /// Parses `NAME:FPR:TPR[:F1]`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = text.split(':').collect();
        if !(3..=4).contains(&parts.len()) || parts[0].is_empty() {
            return Err(CliError::Config(format!("reference {text:?} is not NAME:FPR:TPR[:F1]")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("reference {text:?}: {s:?} is not a number")))
        };
        Ok(Self {
            name: parts[0].to_string(),
            fpr: num(parts[1])?,
            tpr: num(parts[2])?,
            f1: parts.get(3).map(|s| num(s)).transpose()?,
        })
    }
}

/// Contents of the optional JSON configuration file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Gray value (as a string key) to label; `null` removes the default mapping.
    pub label_map: Option<BTreeMap<String, Option<Label>>>,
    pub learning_set: Option<bool>,
    pub strategies: Option<Vec<String>>,
    pub k_max: Option<usize>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub batch_size: Option<usize>,
    pub reference_points: Option<Vec<ReferencePoint>>,
    /// Algorithm names, best first, for the top-n baseline.
    pub ranking: Option<Vec<String>>,
    pub synthetic: Option<SyntheticSpec>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Values given on the command line; each one overrides the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub strategies: Vec<String>,
    pub k_max: Option<usize>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub out: PathBuf,
    pub label_overrides: BTreeMap<u8, Option<Label>>,
    pub learning_set: bool,
    pub strategies: Vec<Strategy>,
    pub k_max: Option<usize>,
    pub workers: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub reference_points: Vec<ReferencePoint>,
    pub ranking: Option<Vec<String>>,
    pub synthetic: Option<SyntheticSpec>,
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, flags: Overrides) -> Result<Self, CliError> {
        let mut label_overrides = BTreeMap::new();
        for (key, label) in file.label_map.unwrap_or_default() {
            let gray: u8 = key
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("label_map key {key:?} is not a gray value 0..=255")))?;
            label_overrides.insert(gray, label);
        }
        let names = if flags.strategies.is_empty() {
            file.strategies.unwrap_or_default()
        } else {
            flags.strategies
        };
        let strategies = if names.is_empty() {
            Strategy::ALL.to_vec()
        } else {
            let mut out = Vec::new();
            for name in &names {
                let s: Strategy = name.parse().map_err(CliError::config)?;
                if !out.contains(&s) {
                    out.push(s);
                }
            }
            out
        };
        let workers = flags
            .workers
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            return Err(CliError::config("worker count must be at least 1"));
        }
        let k_max = flags.k_max.or(file.k_max);
        if k_max == Some(0) {
            return Err(CliError::config("k_max must be at least 1"));
        }
        let batch_size = file.batch_size.unwrap_or(4096);
        if batch_size == 0 {
            return Err(CliError::config("batch_size must be at least 1"));
        }
        let reference_points = file.reference_points.unwrap_or_default();
        for r in &reference_points {
            r.validate()?;
        }
        Ok(Self {
            corpus: flags.corpus.or(file.corpus),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            label_overrides,
            learning_set: file.learning_set.unwrap_or(true),
            strategies,
            k_max,
            workers,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            batch_size,
            reference_points,
            ranking: file.ranking,
            synthetic: file.synthetic,
        })
    }

    pub fn corpus_root(&self) -> Result<&Path, CliError> {
        self.corpus
            .as_deref()
            .ok_or_else(|| CliError::config("no corpus given (use --corpus or the `corpus` config key)"))
    }

    /// `k_max` checked against `n`, defaulting to `min(n, 9)`.
    pub fn k_max_for(&self, n: usize) -> Result<usize, CliError> {
        match self.k_max {
            Some(k) if k > n => Err(CliError::Config(format!("k_max = {k} exceeds the {n} algorithms"))),
            Some(k) => Ok(k),
            None => Ok(n.min(9)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(json: &str) -> ConfigFile {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn flags_override_file() {
        let f = file(r#"{"corpus": "a", "k_max": 3, "workers": 2, "strategies": ["bks"], "seed": 5}"#);
        let flags = Overrides {
            corpus: Some("b".into()),
            k_max: Some(2),
            strategies: vec!["prop-fg".into(), "majority-vote".into()],
            ..Overrides::default()
        };
        let c = RunConfig::resolve(f, flags).unwrap();
        assert_eq!(c.corpus.as_deref(), Some(Path::new("b")));
        assert_eq!(c.k_max, Some(2));
        assert_eq!(c.workers, 2);
        assert_eq!(c.seed, 5);
        assert_eq!(c.strategies, vec![Strategy::PropFg, Strategy::MajorityVote]);
    }

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(ConfigFile::default(), Overrides::default()).unwrap();
        assert_eq!(c.strategies, Strategy::ALL.to_vec());
        assert!(c.learning_set);
        assert!(c.workers >= 1);
        assert_eq!(c.out, PathBuf::from("out"));
        assert_eq!(c.k_max_for(26).unwrap(), 9);
        assert_eq!(c.k_max_for(4).unwrap(), 4);
    }

    #[test]
    fn rejects_bad_values() {
        let zero = Overrides {
            workers: Some(0),
            ..Overrides::default()
        };
        assert!(matches!(
            RunConfig::resolve(ConfigFile::default(), zero),
            Err(CliError::Config(_))
        ));
        let k = RunConfig::resolve(file(r#"{"k_max": 5}"#), Overrides::default()).unwrap();
        assert!(k.k_max_for(4).is_err());
        let strat = Overrides {
            strategies: vec!["vote".into()],
            ..Overrides::default()
        };
        assert!(RunConfig::resolve(ConfigFile::default(), strat).is_err());
        assert!(serde_json::from_str::<ConfigFile>(r#"{"kmax": 3}"#).is_err());
        assert!(RunConfig::resolve(file(r#"{"label_map": {"300": "fg"}}"#), Overrides::default()).is_err());
    }

    #[test]
    fn label_map_overrides() {
        let c = RunConfig::resolve(
            file(r#"{"label_map": {"50": "ignore", "170": null}}"#),
            Overrides::default(),
        )
        .unwrap();
        assert_eq!(c.label_overrides.get(&50), Some(&Some(Label::Ignore)));
        assert_eq!(c.label_overrides.get(&170), Some(&None));
    }

    #[test]
    fn reference_points() {
        let r = ReferencePoint::parse("IUTIS-5:0.01:0.8:0.77").unwrap();
        assert_eq!(r.f1, Some(0.77));
        assert!(r.validate().is_ok());
        assert!(ReferencePoint::parse("x:1.5:0.2").unwrap().validate().is_err());
        assert!(ReferencePoint::parse("x:0.1").is_err());
        let bad = file(r#"{"reference_points": [{"name": "p", "fpr": -0.1, "tpr": 0.5}]}"#);
        assert!(matches!(
            RunConfig::resolve(bad, Overrides::default()),
            Err(CliError::Config(_))
        ));
    }
}
