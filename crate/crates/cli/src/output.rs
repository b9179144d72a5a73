//! Output files. Every file records the configuration hash: CSV files in a
//! leading `# config_sha256=…` comment, JSON files in a `config_sha256` key.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::CliError;

pub struct OutDir {
    dir: PathBuf,
    hash: String,
}

impl OutDir {
    /// Creates the directory (and its parents) when missing.
    pub fn create(dir: &Path, hash: String) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn header(&self) -> Vec<String> {
        vec![format!("config_sha256={}", self.hash)]
    }

    /// Runs `write` on a buffered file. Errors from the library writers are
    /// I/O errors in disguise and are reported as such.
    pub fn write_with(
        &self,
        name: &str,
        write: impl FnOnce(&mut BufWriter<File>, &[String]) -> helmcouple::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let fail = |e: std::io::Error| CliError::Output {
            path: path.clone(),
            source: e,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(fail)?);
        write(&mut w, &self.header()).map_err(|e| match e {
            helmcouple::Error::Io(io) => fail(io),
            other => fail(std::io::Error::other(other.to_string())),
        })?;
        w.flush().map_err(fail)?;
        Ok(path)
    }

    /// Writes `body` (a JSON object) with an added `config_sha256` key.
    pub fn write_json(&self, name: &str, body: Map<String, Value>) -> Result<PathBuf, CliError> {
        let mut doc = Map::new();
        doc.insert("config_sha256".into(), Value::String(self.hash.clone()));
        doc.extend(body);
        let text =
            serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
        let path = self.path(name);
        std::fs::write(&path, text + "\n").map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}
