//! Output files. Every file is written to a temporary sibling and renamed
//! into place, and a batch is only started once all contents are rendered.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Rendered files waiting to be written, keyed by relative path.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct OutputSet {
    files: BTreeMap<PathBuf, String>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<PathBuf>, contents: impl Into<String>) {
        self.files.insert(name.into(), contents.into());
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<PathBuf>, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
        text.push('\n');
        self.add(name, text);
    }

    /// Moves every file of `other` under `prefix`.
    pub fn extend_under(&mut self, prefix: impl AsRef<Path>, other: OutputSet) {
        for (name, contents) in other.files {
            self.files.insert(prefix.as_ref().join(name), contents);
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &Path> {
        self.files.keys().map(PathBuf::as_path)
    }

    pub fn get(&self, name: impl AsRef<Path>) -> Option<&str> {
        self.files.get(name.as_ref()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes all files below `dir`, creating directories as needed.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let path = dir.join(name);
            write_atomic(&path, contents.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent)?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_nested_files_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = OutputSet::new();
        set.add("a.csv", "x\n");
        let mut inner = OutputSet::new();
        inner.add_json("s.json", &vec![1, 2]);
        set.extend_under("run", inner);
        let paths = set.write_to(dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(fs::read_to_string(dir.path().join("a.csv")).unwrap(), "x\n");
        assert!(fs::read_to_string(dir.path().join("run/s.json")).unwrap().contains('2'));
        let top: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(top.len(), 2);
    }

    #[test]
    fn overwrite_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "two");
    }
}
