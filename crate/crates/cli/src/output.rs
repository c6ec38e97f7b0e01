//! File input and atomic output.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use fts_core::FunctionalSample;
use tempfile::NamedTempFile;

use crate::CliError;

/// Writes `contents` to `out` via a temporary file in the same directory
/// and a rename, or to standard output when `out` is `None`.
pub fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    let Some(path) = out else {
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::data(format!("cannot write to standard output: {e}")));
    };
    let fail = |e: &dyn std::fmt::Display| CliError::data(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

pub fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

pub fn read_sample(path: &Path) -> Result<FunctionalSample, CliError> {
    let file = open(path)?;
    FunctionalSample::read_csv(BufReader::new(file))
        .map_err(|e| CliError::from(e).with_context(path))
}

impl CliError {
    /// Prefixes the message with the offending path.
    pub fn with_context(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}
