//! Outputs are written into a sibling temp directory and renamed into
//! place only after every file succeeded; failures leave nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub struct Staging {
    tmp: PathBuf,
    dest: PathBuf,
    force: bool,
    done: bool,
}

fn sibling(dest: &Path, tag: &str) -> PathBuf {
    let name = dest.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    dest.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

impl Staging {
    /// Fails up front when `dest` exists and `force` is off.
    pub fn dir(dest: &Path, force: bool) -> CliResult<Self> {
        if dest.exists() && !force {
            return Err(CliError::usage(format!(
                "{} already exists (use --force to replace it)",
                dest.display()
            )));
        }
        if let Some(parent) = dest.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let tmp = sibling(dest, "tmp");
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        }
        fs::create_dir(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        Ok(Staging { tmp, dest: dest.to_path_buf(), force, done: false })
    }

    pub fn path(&self) -> &Path {
        &self.tmp
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.tmp.join(name)
    }

    pub fn commit(mut self) -> CliResult<()> {
        let old = sibling(&self.dest, "old");
        let replacing = self.dest.exists();
        if replacing {
            if !self.force {
                return Err(CliError::usage(format!("{} appeared while running", self.dest.display())));
            }
            fs::rename(&self.dest, &old).map_err(|e| CliError::io(&self.dest, e))?;
        }
        fs::rename(&self.tmp, &self.dest).map_err(|e| CliError::io(&self.dest, e))?;
        self.done = true;
        if replacing {
            let _ = if old.is_dir() { fs::remove_dir_all(&old) } else { fs::remove_file(&old) };
        }
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.done {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

/// Single-file variant: write to a temp file next to `dest`, then rename.
pub fn write_file_atomic(dest: &Path, write: impl FnOnce(&Path) -> CliResult<()>) -> CliResult<()> {
    if let Some(parent) = dest.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let tmp = sibling(dest, "tmp");
    let result = write(&tmp).and_then(|_| fs::rename(&tmp, dest).map_err(|e| CliError::io(dest, e)));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
