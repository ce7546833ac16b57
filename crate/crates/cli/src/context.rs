use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use carnot::io::{load_group, GroupRef};
use carnot::metric::HomogeneousMetric;
use carnot::{catalog, GradedAlgebra};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input, or a failed check.
    Validation(String),
    /// A numerical solver did not converge or left its domain.
    Solver(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Solver(m) => f.write_str(m),
        }
    }
}

impl From<carnot::ParseError> for CliError {
    fn from(e: carnot::ParseError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<carnot::AlgebraError> for CliError {
    fn from(e: carnot::AlgebraError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<carnot::SubgroupError> for CliError {
    fn from(e: carnot::SubgroupError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<carnot::SolverError> for CliError {
    fn from(e: carnot::SolverError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        carnot::ParseError::from(e).into()
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_EXHAUSTED: u8 = 4;

#[derive(Clone, Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: Vec<String>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub struct Context {
    pub seed: u64,
    pub threads: Option<usize>,
    pub catalog_dir: Option<PathBuf>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    stdout: String,
}

impl Context {
    pub fn new(seed: u64, threads: Option<usize>, catalog_dir: Option<PathBuf>) -> Self {
        Context {
            seed,
            threads,
            catalog_dir,
            inputs: Vec::new(),
            outputs: Vec::new(),
            stdout: String::new(),
        }
    }

    /// Reads an input file and records its hash.
    pub fn read(&mut self, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        if !self.inputs.iter().any(|d| d.path == path.display().to_string()) {
            self.inputs.push(FileDigest {
                path: path.display().to_string(),
                sha256: sha256_hex(&bytes),
            });
        }
        String::from_utf8(bytes).map_err(|_| CliError::Validation(format!("{} is not UTF-8", path.display())))
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> CliResult<T> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| {
            let e = carnot::ParseError::from(e);
            CliError::Validation(format!("{}: {e}", path.display()))
        })
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
        }
        fs::write(path, bytes).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn print(&mut self, text: impl AsRef<str>) {
        self.stdout.push_str(text.as_ref());
        if !self.stdout.ends_with('\n') {
            self.stdout.push('\n');
        }
    }

    pub fn take_stdout(&mut self) -> String {
        std::mem::take(&mut self.stdout)
    }

    /// Group by file path, then `<catalog_dir>/<name>.json`, then built-in name.
    pub fn group(&mut self, reference: &str) -> CliResult<(GradedAlgebra, Option<HomogeneousMetric>)> {
        let path = Path::new(reference);
        if path.is_file() {
            let text = self.read(path)?;
            return load_group(&text).map_err(|e| CliError::Validation(format!("{reference}: {e}")));
        }
        if let Some(dir) = self.catalog_dir.clone() {
            let candidate = dir.join(format!("{reference}.json"));
            if candidate.is_file() {
                let text = self.read(&candidate)?;
                return load_group(&text).map_err(|e| CliError::Validation(format!("{}: {e}", candidate.display())));
            }
        }
        catalog::by_name(reference)
            .map(|g| (g, None))
            .ok_or_else(|| CliError::Validation(format!("`{reference}` is neither a file nor a catalog group")))
    }

    pub fn algebra(&mut self, reference: &str) -> CliResult<GradedAlgebra> {
        self.group(reference).map(|(g, _)| g)
    }

    pub fn group_ref(&mut self, r: &GroupRef) -> CliResult<GradedAlgebra> {
        match r {
            GroupRef::Name(n) => self.algebra(n),
            GroupRef::Inline(f) => Ok(f.to_algebra()?),
        }
    }

    pub fn manifest(&self, command: Vec<String>) -> RunManifest {
        let mut outputs = self.outputs.clone();
        if !self.stdout.is_empty() {
            outputs.push(FileDigest {
                path: "<stdout>".into(),
                sha256: sha256_hex(self.stdout.as_bytes()),
            });
        }
        RunManifest {
            tool: "carnot",
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed: self.seed,
            threads: self.threads,
            inputs: self.inputs.clone(),
            outputs,
        }
    }
}

pub fn to_pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
