//! One JSON document per experiment file in a data directory.
//!
//! Writes go to a temporary sibling and are renamed into place, so a reader
//! always sees either the old or the new document. Mutations of one file are
//! serialized through a per-name lock; different files proceed in parallel.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{RasError, Result};
use crate::experiment::ExperimentFile;
use crate::model::CloudConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSummary {
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub experiments: usize,
}

#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

/// Names become file stems, so they are limited to a portable character set.
pub fn validate_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name.len() <= 64
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(RasError::BadName(name.to_string()))
    }
}

impl FileStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(FileStore { dir, locks: Mutex::new(HashMap::new()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}.json"))
    }

    fn lock_for(&self, name: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        locks.entry(name.to_string()).or_default().clone()
    }

    fn save(&self, file: &ExperimentFile) -> Result<()> {
        let path = self.path(&file.name);
        let tmp = self.dir.join(format!(".{}.json.tmp", file.name));
        fs::write(&tmp, serde_json::to_vec_pretty(file)?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn create(&self, name: &str, config: CloudConfig) -> Result<ExperimentFile> {
        validate_name(name)?;
        let lock = self.lock_for(name);
        let _guard = lock.lock().expect("file lock poisoned");
        if self.path(name).exists() {
            return Err(RasError::FileExists(name.to_string()));
        }
        let file = ExperimentFile::new(name, config)?;
        self.save(&file)?;
        Ok(file)
    }

    pub fn load(&self, name: &str) -> Result<ExperimentFile> {
        validate_name(name)?;
        match fs::read(self.path(name)) {
            Ok(bytes) => Ok(serde_json::from_slice(&bytes)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(RasError::FileNotFound(name.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    /// Applies `f` to the stored file and persists the result only when `f`
    /// succeeds.
    pub fn update<T>(&self, name: &str, f: impl FnOnce(&mut ExperimentFile) -> Result<T>) -> Result<T> {
        let lock = self.lock_for(name);
        let _guard = lock.lock().expect("file lock poisoned");
        let mut file = self.load(name)?;
        let out = f(&mut file)?;
        self.save(&file)?;
        Ok(out)
    }

    pub fn list(&self) -> Result<Vec<FileSummary>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            if path.extension().and_then(|e| e.to_str()) != Some("json") || validate_name(stem).is_err() {
                continue;
            }
            let file = self.load(stem)?;
            out.push(FileSummary { name: file.name, created_at: file.created_at, experiments: file.experiments.len() });
        }
        out.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(out)
    }
}
