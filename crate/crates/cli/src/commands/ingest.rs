use crate::config::RunConfig;
use crate::data;
use crate::error::CliError;

pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    let loaded = data::load(cfg)?;
    let s = loaded.stats;
    Ok(format!(
        "ingest: {} videos, {} written, {} fresh, {} rebuilt\n",
        loaded.set.len(),
        s.written,
        s.fresh,
        s.rebuilt
    ))
}
