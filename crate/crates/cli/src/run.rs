//! Per-invocation bookkeeping: input/output tracking, result notes and the
//! manifest written next to the outputs.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum CliError {
    /// Malformed input or options; exit code 2.
    Validation(String),
    /// Resonance, pole, blowup and friends; exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl From<gssm::Error> for CliError {
    fn from(e: gssm::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn validation<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Validation(msg.into()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Run {
    out: PathBuf,
    pub threads: usize,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<(String, String)>,
    notes: Vec<(String, String)>,
}

impl Run {
    pub fn new(out: PathBuf, threads: usize) -> CliResult<Self> {
        std::fs::create_dir_all(&out)
            .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", out.display())))?;
        Ok(Run {
            out,
            threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
        })
    }

    /// Reads an input file and records its hash.
    pub fn read(&mut self, path: &Path) -> CliResult<String> {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push((path.to_path_buf(), sha256_hex(&bytes)));
        String::from_utf8(bytes).map_err(|_| CliError::Validation(format!("{} is not UTF-8 text", path.display())))
    }

    /// Writes an output file into the output directory.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        std::fs::write(self.out.join(name), bytes)?;
        self.outputs.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl fmt::Display) {
        println!("{key}: {value}");
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn output_names(&self) -> Vec<&str> {
        self.outputs.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Writes `manifest.txt`: resolved options, hashed inputs and outputs,
    /// and result notes. No timestamps, so identical runs give identical
    /// manifests.
    pub fn finish(&mut self, command: &str, options: &str) -> CliResult<()> {
        let mut m = String::new();
        let _ = writeln!(m, "gssm {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(m, "command {command}");
        let _ = writeln!(m, "threads {}", self.threads);
        m.push_str("options\n");
        for line in options.lines() {
            let _ = writeln!(m, "  {line}");
        }
        for (p, h) in &self.inputs {
            let _ = writeln!(m, "input {} sha256 {h}", p.display());
        }
        for (n, h) in &self.outputs {
            let _ = writeln!(m, "output {n} sha256 {h}");
        }
        for (k, v) in &self.notes {
            let _ = writeln!(m, "result {k} = {v}");
        }
        std::fs::write(self.out.join("manifest.txt"), m)?;
        Ok(())
    }
}
