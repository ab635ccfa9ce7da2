//! Artifact writers: CSV with a provenance comment header, pretty JSON with the hash embedded.

use std::fs;
use std::path::{Path, PathBuf};

use gapstress::oracle::export::fmt_f64;
use serde_json::Value;

use crate::CliError;

pub struct Artifacts {
    pub dir: PathBuf,
    pub hash: String,
    pub command: &'static str,
}

impl Artifacts {
    pub fn new(dir: &Path, hash: String, command: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), hash, command })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// `# gapstress <command> config-sha256=<hash>`, `# columns: …`, then RFC-4180 rows.
    pub fn csv(&self, name: &str, columns: &[&str], doc: &str, rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut out = format!("# gapstress {} config-sha256={}\n# columns: {doc}\n", self.command, self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(columns).map_err(csv_err)?;
            for r in rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        fs::write(&path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn json(&self, name: &str, mut body: Value) -> Result<PathBuf, CliError> {
        if let Value::Object(m) = &mut body {
            m.insert("command".into(), Value::from(self.command));
            m.insert("config_sha256".into(), Value::from(self.hash.clone()));
        }
        let path = self.path(name);
        let text = serde_json::to_string_pretty(&body).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn bytes(&self, name: &str, data: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, data).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn num(v: f64) -> String {
    fmt_f64(v)
}

/// Non-finite values become JSON `null`.
pub fn jnum(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else {
        Value::Null
    }
}

pub fn jvec(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| jnum(*x)).collect())
}

pub fn jmat(m: &[Vec<f64>]) -> Value {
    Value::Array(m.iter().map(|r| jvec(r)).collect())
}
