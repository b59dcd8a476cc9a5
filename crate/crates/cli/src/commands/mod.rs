pub mod count;
pub mod evaluate;
pub mod ingest;
pub mod roc;
pub mod search;
pub mod synth;

use std::fs;
use std::path::Path;

use crate::error::{io_error, CliError};

pub(crate) fn write_output(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}
