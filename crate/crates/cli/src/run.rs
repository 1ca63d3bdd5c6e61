//! Per-invocation bookkeeping: input/output digests, buffered stdout, atomic
//! writes and the run manifest.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Pseudo-path under which the digest of standard output is recorded.
pub const STDOUT: &str = "<stdout>";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_IMPOSSIBLE: i32 = 3;

#[derive(Debug)]
pub enum Failure {
    Read {
        path: PathBuf,
        source: io::Error,
    },
    Write {
        path: PathBuf,
        source: io::Error,
    },
    /// A library error, optionally prefixed with the file it came from.
    Library {
        context: Option<String>,
        error: riffle::Error,
    },
    Invalid(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Library { error: riffle::Error::ImpossibleEvidence { .. }, .. } => EXIT_IMPOSSIBLE,
            _ => EXIT_INVALID,
        }
    }

    pub fn in_file(path: &Path) -> impl FnOnce(riffle::Error) -> Failure + '_ {
        move |error| Failure::Library { context: Some(path.display().to_string()), error }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Read { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            Failure::Write { path, source } => write!(f, "cannot write {}: {source}", path.display()),
            Failure::Library { context: Some(c), error } => write!(f, "{c}: {error}"),
            Failure::Library { context: None, error } => write!(f, "{error}"),
            Failure::Invalid(msg) => f.write_str(msg),
        }
    }
}

impl From<riffle::Error> for Failure {
    fn from(error: riffle::Error) -> Self {
        Failure::Library { context: None, error }
    }
}

pub type Outcome = Result<i32, Failure>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// Everything needed to rerun an invocation and check its outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u64,
    pub tool_version: String,
    pub command: String,
    /// Arguments after the program name, verbatim.
    pub flags: Vec<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub exit_code: i32,
    pub timing: Timing,
    pub summary: Map<String, Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Default)]
pub struct Run {
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub stdout: String,
    pub seed: Option<u64>,
    pub summary: Map<String, Value>,
}

impl Run {
    pub fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let bytes = fs::read(path).map_err(|source| Failure::Read { path: path.to_owned(), source })?;
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        String::from_utf8(bytes).map_err(|_| Failure::Invalid(format!("{} is not valid UTF-8", path.display())))
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<(), Failure> {
        write_atomic(path, contents.as_bytes())?;
        self.outputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(contents.as_bytes()) });
        Ok(())
    }

    /// Writes to `path` when given, otherwise to standard output.
    pub fn emit(&mut self, path: Option<&Path>, contents: &str) -> Result<(), Failure> {
        match path {
            Some(p) => self.write(p, contents),
            None => {
                self.stdout.push_str(contents);
                Ok(())
            }
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_owned(), value.into());
    }

    /// Output digests including standard output, when anything was printed.
    pub fn all_outputs(&self) -> Vec<FileDigest> {
        let mut out = self.outputs.clone();
        if !self.stdout.is_empty() {
            out.push(FileDigest { path: STDOUT.into(), sha256: sha256_hex(self.stdout.as_bytes()) });
        }
        out
    }
}

/// Temp file in the destination directory, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let fail = |source| Failure::Write { path: path.to_owned(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Sibling path with `suffix` appended to the file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
