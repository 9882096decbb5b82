use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use akira_kit::{Error, Result};
use serde::Serialize;

pub const FAILURE_MARKER: &str = "FAILED";

fn missing(path: &Path, what: &str) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: io::Error::new(io::ErrorKind::NotFound, what.to_string()),
    }
}

pub fn require_dir(path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(missing(path, "directory not found"))
    }
}

pub fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(missing(path, "file not found"))
    }
}

/// `path` itself when it is a file, otherwise its `*.ext` entries sorted by
/// name.
pub fn list_files(path: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    require_dir(path)?;
    let mut out = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| io_err(path, e))? {
        let p = entry.map_err(|e| io_err(path, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == ext) {
            out.push(p);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(missing(path, &format!("no .{ext} files")));
    }
    Ok(out)
}

pub fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

/// Output directory that records a failure marker unless the run finishes.
pub struct OutputDir {
    path: PathBuf,
}

impl OutputDir {
    pub fn prepare(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).map_err(|e| io_err(path, e))?;
        let marker = path.join(FAILURE_MARKER);
        if marker.exists() {
            fs::remove_file(&marker).map_err(|e| io_err(&marker, e))?;
        }
        Ok(Self {
            path: path.to_path_buf(),
        })
    }

    /// Runs `f`, leaving a marker with the error message when it fails.
    pub fn run<T>(&self, f: impl FnOnce(&Path) -> Result<T>) -> Result<T> {
        let out = f(&self.path);
        if let Err(e) = &out {
            let marker = self.path.join(FAILURE_MARKER);
            if let Err(w) = fs::write(&marker, format!("{e}\n")) {
                log::error!("could not write {}: {w}", marker.display());
            }
        }
        out
    }
}

/// Writes a single file through a temporary sibling so a failed run never
/// leaves a partial file behind.
pub fn write_atomically(path: &Path, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    match f(&tmp) {
        Ok(()) => fs::rename(&tmp, path).map_err(|e| io_err(path, e)),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}
