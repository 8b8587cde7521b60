use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Files written by one command. Unless [`Outputs::commit`] is called, they
/// are deleted again on drop, along with the directory if it was created.
pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    keep: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            keep: false,
        })
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_str(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn commit(mut self) {
        self.keep = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.keep {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dropped_outputs_are_removed() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        {
            let mut out = Outputs::new(&dir).unwrap();
            out.write_str("a.txt", "x").unwrap();
            assert!(dir.join("a.txt").exists());
        }
        assert!(!dir.exists());
    }

    #[test]
    fn committed_outputs_stay() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = Outputs::new(tmp.path()).unwrap();
        out.write_str("a.txt", "x").unwrap();
        out.commit();
        assert_eq!(fs::read_to_string(tmp.path().join("a.txt")).unwrap(), "x");
    }

    #[test]
    fn existing_directory_is_kept_on_failure() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("old.txt"), "keep").unwrap();
        {
            let mut out = Outputs::new(tmp.path()).unwrap();
            out.write_str("new.txt", "x").unwrap();
        }
        assert!(tmp.path().join("old.txt").exists());
        assert!(!tmp.path().join("new.txt").exists());
    }
}
