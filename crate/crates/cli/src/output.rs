//! CSV files: `<command>-<report>.csv` and `<command>-<report>_meta.csv`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use isolab_core::ExperimentReport;

use crate::commands::Command;

/// Writes every report and its metadata; returns the paths in write order.
pub fn write_reports(dir: &Path, command: Command, reports: &[ExperimentReport]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in reports {
        let stem = format!("{command}-{}", r.name);
        for (path, body) in [
            (dir.join(format!("{stem}.csv")), r.to_csv()),
            (dir.join(format!("{stem}_meta.csv")), r.metadata_csv()),
        ] {
            fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}
