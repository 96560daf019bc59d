//! Staged output: files are written to a scratch directory inside the
//! target and moved into place only once the whole run succeeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// CSV text with a header row.
pub struct Table {
    text: String,
    columns: usize,
    rows: usize,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let text = header.iter().map(|h| h.as_ref()).collect::<Vec<_>>().join(",") + "\n";
        Self { text, columns: header.len(), rows: 0 }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        debug_assert_eq!(fields.len(), self.columns);
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(f.as_ref());
        }
        self.text.push('\n');
        self.rows += 1;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: usize,
    pub sha256: String,
}

pub struct Staging {
    target: PathBuf,
    dir: PathBuf,
    created_target: bool,
    files: Vec<FileEntry>,
    done: bool,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self, CliError> {
        let created_target = !target.exists();
        fs::create_dir_all(target)?;
        let dir = target.join(format!(".staging-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir)?;
        Ok(Self { target: target.to_path_buf(), dir, created_target, files: Vec::new(), done: false })
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        fs::write(self.dir.join(name), table.text.as_bytes())?;
        self.files.push(FileEntry { name: name.into(), rows: table.rows, sha256: sha256_hex(table.text.as_bytes()) });
        Ok(())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `manifest.json` and moves every staged file into the target.
    pub fn commit<M: Serialize>(mut self, manifest: &M) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(manifest).expect("manifest serializes") + "\n";
        fs::write(self.dir.join("manifest.json"), text)?;
        for name in self.files.iter().map(|f| f.name.as_str()).chain(["manifest.json"]) {
            fs::rename(self.dir.join(name), self.target.join(name))?;
        }
        fs::remove_dir(&self.dir)?;
        self.done = true;
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.done {
            let _ = fs::remove_dir_all(&self.dir);
            if self.created_target {
                let _ = fs::remove_dir(&self.target);
            }
        }
    }
}
