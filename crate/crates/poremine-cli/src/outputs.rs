//! Collected output files, committed atomically: every file is staged
//! next to its destination and renamed into place only after its bytes
//! are fully written, so a failed run never leaves a partial file.

use std::fs;
use std::path::PathBuf;

use crate::CliError;

pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self { files: Vec::new() }
    }

    pub fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    /// Writes every staged file via a sibling temp file and rename.
    pub fn commit(self) -> Result<(), CliError> {
        for (path, bytes) in self.files {
            let io_err = |e: std::io::Error| {
                CliError::io(format!("cannot write {}: {e}", path.display()))
            };
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent).map_err(io_err)?;
                }
            }
            let file_name = path
                .file_name()
                .ok_or_else(|| CliError::args(format!("{} is not a file path", path.display())))?;
            let mut tmp_name = std::ffi::OsString::from(".");
            tmp_name.push(file_name);
            tmp_name.push(".tmp");
            let tmp = path.with_file_name(tmp_name);
            fs::write(&tmp, &bytes).map_err(io_err)?;
            fs::rename(&tmp, &path).map_err(io_err)?;
        }
        Ok(())
    }
}
