//! Provenance stamps on output files.
//!
//! CSV and text outputs start with `# config-hash:` and `# seed:` comment
//! lines; JSON outputs carry the same values as fields.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            config_hash: config_hash.into(),
            seed: seed.to_string(),
        }
    }

    /// Combined stamp of several inputs, e.g. for a report.
    pub fn merged(parts: &[Provenance]) -> Self {
        let join = |f: fn(&Provenance) -> &str| parts.iter().map(f).collect::<Vec<_>>().join(" ");
        Self {
            config_hash: join(|p| &p.config_hash),
            seed: join(|p| &p.seed),
        }
    }

    pub fn comment_lines(&self) -> String {
        format!("# config-hash: {}\n# seed: {}\n", self.config_hash, self.seed)
    }

    /// Creates `path` with the comment header, then lets `body` write the
    /// rest.
    pub fn write_commented<F>(&self, path: &Path, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut dyn Write) -> CliResult<()>,
    {
        create_parent(path)?;
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.comment_lines().as_bytes())
            .map_err(|e| CliError::io(path, e))?;
        body(&mut w)?;
        w.flush().map_err(|e| CliError::io(path, e))
    }
}

pub(crate) fn create_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(())
}

/// Reads the comment header written by [`Provenance::write_commented`].
pub fn read_comment_header(text: &str) -> Option<Provenance> {
    let mut hash = None;
    let mut seed = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(v) = line.strip_prefix("# config-hash: ") {
            hash = Some(v.to_string());
        } else if let Some(v) = line.strip_prefix("# seed: ") {
            seed = Some(v.to_string());
        }
    }
    Some(Provenance {
        config_hash: hash?,
        seed: seed?,
    })
}
