use std::fs;
use std::path::Path;

use bgsfuse::combine::CombinerFile;
use bgsfuse::metrics::write_report;

use super::write_output;
use crate::config::RunConfig;
use crate::data;
use crate::error::CliError;

pub const METRICS_FILE: &str = "metrics.csv";

/// Scores a stored combiner on the corpus and writes the metrics report.
pub fn run(cfg: &RunConfig, combiner_path: &Path) -> Result<String, CliError> {
    let text =
        fs::read_to_string(combiner_path).map_err(|e| CliError::Config(format!("{}: {e}", combiner_path.display())))?;
    let file = CombinerFile::from_json(&text)?;
    let combiner = file.to_combiner()?;
    let loaded = data::load(cfg)?;
    let algorithms = loaded.corpus.algorithms();
    // an unnamed combiner applies to the corpus algorithms in manifest order
    let names: Vec<String> = if file.algorithms.is_empty() {
        algorithms.iter().take(file.n).cloned().collect()
    } else {
        file.algorithms.clone()
    };
    if names.len() != file.n {
        return Err(CliError::Config(format!(
            "combiner has arity {} but the corpus has {} algorithms",
            file.n,
            algorithms.len()
        )));
    }
    let subset = names
        .iter()
        .map(|name| {
            loaded
                .corpus
                .algorithm_index(name)
                .ok_or_else(|| CliError::Config(format!("combiner algorithm {name:?} is not in the corpus")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let set = loaded.set.project(&subset)?;
    let confusions = set.confusions(&combiner)?;
    let perf = set.evaluate(&combiner)?;
    let mut report = Vec::new();
    write_report(&mut report, &set, &confusions, &perf).map_err(CliError::data)?;
    let path = cfg.out.join(METRICS_FILE);
    write_output(&path, &report)?;
    let show = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| v.to_string());
    Ok(format!(
        "evaluate: tpr_bar {} fpr_bar {} f1_bar {} ({})\n",
        show(perf.tpr_bar),
        show(perf.fpr_bar),
        show(perf.f1_bar),
        path.display()
    ))
}
