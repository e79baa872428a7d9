//! Deterministic report emission: sorted keys, numbers rounded to the
//! report precision, `\n` line endings.

use std::fs;
use std::path::{Path, PathBuf};

use metricgraph_core::io::{format_sig, round_sig, write_matrix_file, REPORT_DIGITS};
use metricgraph_core::SquareMatrix;
use serde::Serialize;
use serde_json::{Number, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Rounds every floating-point number in `v` to [`REPORT_DIGITS`].
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"), REPORT_DIGITS);
            Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(x: &T) -> CliResult<Value> {
    serde_json::to_value(x).map_err(|e| CliError::internal(format!("serializing report: {e}")))
}

/// Pretty JSON with sorted keys and rounded numbers, newline-terminated.
pub fn render(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&canonical(v)).expect("values serialize");
    s.push('\n');
    s
}

pub fn report_number(x: f64) -> String {
    format_sig(x, REPORT_DIGITS)
}

/// Writes files into one output directory and remembers their digests.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl OutputDir {
    pub fn new(dir: &Path) -> Self {
        OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| CliError::internal(format!("{}: {e}", p.display())))?;
        self.written.push((name.to_string(), digest_bytes(text.as_bytes())));
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: Value) -> CliResult<()> {
        self.write_text(name, &render(v))
    }

    pub fn write_matrix(&mut self, name: &str, ids: &[String], m: &SquareMatrix) -> CliResult<()> {
        let p = self.path(name);
        write_matrix_file(&p, ids, m).map_err(|e| CliError::internal(format!("{}: {e}", p.display())))?;
        let digest = digest_file(&p)?;
        self.written.push((name.to_string(), digest));
        Ok(())
    }

    /// `(file name, sha256)` of everything written so far.
    pub fn digests(&self) -> &[(String, String)] {
        &self.written
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))?;
    Ok(digest_bytes(&bytes))
}

/// Exclusive ownership of an output directory for the life of the value.
pub struct DirLock {
    path: PathBuf,
}

pub const LOCK_FILE: &str = ".metricgraph.lock";

impl DirLock {
    pub fn acquire(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::internal(format!("{}: {e}", dir.display())))?;
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::internal(format!(
                "output directory {} is in use (remove {} if no other run is active)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(CliError::internal(format!("{}: {e}", path.display()))),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
