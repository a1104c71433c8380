use anyhow::{Context, Result};
use imtl_core::PolicyCheckpoint;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// A directory of artifacts that is rolled back unless committed: every file
/// and directory it created is removed again when it is dropped uncommitted.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    created_dirs: Vec<PathBuf>,
    created_files: Vec<PathBuf>,
    committed: bool,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let mut out = Self {
            root: root.into(),
            created_dirs: Vec::new(),
            created_files: Vec::new(),
            committed: false,
        };
        let root = out.root.clone();
        out.ensure_dir(&root)?;
        Ok(out)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        for d in missing.into_iter().rev() {
            fs::create_dir(&d).with_context(|| format!("cannot create directory {}", d.display()))?;
            self.created_dirs.push(d);
        }
        Ok(())
    }

    /// Writes `rel` under the root via a temporary file and rename.
    pub fn write(&mut self, rel: impl AsRef<Path>, contents: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            self.ensure_dir(parent)?;
        }
        let tmp = path.with_extension("partial");
        fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
        fs::rename(&tmp, &path).with_context(|| format!("cannot write {}", path.display()))?;
        self.created_files.push(path.clone());
        Ok(path)
    }

    pub fn save_checkpoint(&mut self, rel: impl AsRef<Path>, ck: &PolicyCheckpoint) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            self.ensure_dir(parent)?;
        }
        ck.save(&path)?;
        self.created_files.push(path.clone());
        Ok(path)
    }

    /// Records when and how the artifacts were produced. Timestamps live
    /// only in this file so every other artifact is reproducible.
    pub fn write_metadata(&mut self, command: &str) -> Result<PathBuf> {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let argv: Vec<String> = std::env::args().collect();
        let text = format!(
            "command = {command}\nargv = {}\nversion = {}\ncreated_unix = {secs}\n",
            argv.join(" "),
            env!("CARGO_PKG_VERSION"),
        );
        self.write("metadata.txt", text.as_bytes())
    }

    pub fn commit(mut self) -> PathBuf {
        self.committed = true;
        self.root.clone()
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in self.created_files.iter().rev() {
            let _ = fs::remove_file(f);
        }
        // only directories this instance created, and only when empty
        for d in self.created_dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}
