//! Batch driver: reads a [`RunConfig`], runs it and writes CSV and JSON
//! artifacts next to a manifest.
//!
//! Every command writes `<command>.csv`, `<command>.json` and
//! `manifest.json` to the output directory. The first CSV column is always
//! `config_hash`. Output files are written through a temporary file and
//! renamed into place. The directory is taken from `--out`, then
//! `SDRELAX_OUT_DIR`, then `output.dir`, then `sdrelax-out`.
//! `SDRELAX_WORKERS` sets the worker count of parallel stages.

mod commands;
mod config;

pub use config::{
    BlowupMode, BulkSpec, Command, CustomBulk, CustomSurface, FieldSpec, MatrixSpec, OutputSpec, Params, RunConfig,
    SurfaceSpec, ToleranceOverrides,
};

use crate::approx::ApproxError;
use crate::cell::CellError;
use crate::density::catalog;
use crate::multilevel::MultilevelError;
use clap::Parser;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const OUT_DIR_ENV: &str = "SDRELAX_OUT_DIR";
pub const WORKERS_ENV: &str = "SDRELAX_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<CellError> for CliError {
    fn from(e: CellError) -> Self {
        match e {
            CellError::InvalidSpec(_)
            | CellError::NotGridAligned(_)
            | CellError::NonNested(_)
            | CellError::LadderTooShort(_)
            | CellError::CubeExitsDomain { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ApproxError> for CliError {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::Sbv(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MultilevelError> for CliError {
    fn from(e: MultilevelError) -> Self {
        match e {
            MultilevelError::Invalid(_) | MultilevelError::Unsupported(_) | MultilevelError::Mismatch(..) => {
                CliError::Config(e.to_string())
            }
            MultilevelError::Approx(a) => a.into(),
            MultilevelError::Cell(c) => c.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<crate::sbv::SbvError> for CliError {
    fn from(e: crate::sbv::SbvError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Command-line overrides of a run.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Read from `SDRELAX_OUT_DIR` and `SDRELAX_WORKERS` when `None`.
    pub env_out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn from_env(seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, CliError> {
        let env_out = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        let workers = match std::env::var(WORKERS_ENV) {
            Ok(v) if !v.is_empty() => Some(
                v.parse::<usize>()
                    .ok()
                    .filter(|w| *w > 0)
                    .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV}=`{v}` is not a positive integer")))?,
            ),
            _ => None,
        };
        Ok(Overrides {
            seed,
            out,
            env_out,
            workers,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub versions: Vec<(String, String)>,
    pub outputs: Vec<OutputFile>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub config_hash: String,
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
}

/// Rows of a CSV artifact, all fields already formatted.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self, hash: &str) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(std::iter::once("config_hash").chain(self.header.iter().copied())).map_err(io)?;
        for r in &self.rows {
            w.write_record(std::iter::once(hash).chain(r.iter().map(String::as_str))).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Result of a command before it is written out.
pub struct Artifacts {
    pub table: Table,
    pub json: serde_json::Value,
}

/// Short hash of the configuration with the effective seed and without
/// the output section.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.output = OutputSpec::default();
    let text = serde_json::to_string(&c).expect("config serializes");
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.join(name).display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}

fn resolve_out(cfg: &RunConfig, ov: &Overrides) -> PathBuf {
    ov.out
        .clone()
        .or_else(|| ov.env_out.clone())
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sdrelax-out"))
}

/// Runs a parsed configuration and writes its artifacts.
pub fn run(cfg: &RunConfig, ov: &Overrides) -> Result<RunOutcome, CliError> {
    let mut cfg = cfg.clone();
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    let hash = config_hash(&cfg);
    let art = commands::execute(&cfg, ov.workers.unwrap_or(1).max(1))?;
    let dir = resolve_out(&cfg, ov);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let name = cfg.command.name();
    let csv = art.table.to_csv(&hash)?;
    let json = serde_json::to_vec_pretty(&art.json).map_err(|e| CliError::Io(e.to_string()))?;
    let mut files = Vec::new();
    let mut outputs = Vec::new();
    for (file, bytes) in [(format!("{name}.csv"), csv), (format!("{name}.json"), json)] {
        outputs.push(OutputFile {
            sha256: hex::encode(Sha256::digest(&bytes)),
            file: file.clone(),
        });
        files.push(write_atomic(&dir, &file, &bytes)?);
    }
    let manifest = Manifest {
        command: name.to_string(),
        config_hash: hash.clone(),
        seed: cfg.seed,
        versions: vec![
            ("sdrelax".into(), env!("CARGO_PKG_VERSION").into()),
            ("config-schema".into(), "1".into()),
        ],
        outputs,
    };
    let bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    files.push(write_atomic(&dir, "manifest.json", &bytes)?);
    Ok(RunOutcome {
        out_dir: dir,
        config_hash: hash,
        files,
        manifest,
    })
}

/// Reads `path` and runs it as `command`.
pub fn run_config(path: &Path, command: Option<Command>, ov: &Overrides) -> Result<RunOutcome, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = RunConfig::from_json(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(c) = command {
        if c != cfg.command {
            return Err(CliError::Config(format!(
                "command `{}` does not match `{}` in {}",
                c.name(),
                cfg.command.name(),
                path.display()
            )));
        }
    }
    run(&cfg, ov)
}

/// The built-in densities as a table.
pub fn list_catalog() -> Table {
    let mut t = Table::new(&["name", "kind", "formula", "constants", "core"]);
    for e in catalog::list_catalog() {
        let constants: Vec<String> = e.constants.iter().map(|(k, v)| format!("{k}={v}")).collect();
        t.push(vec![
            e.name.to_string(),
            e.kind.to_string(),
            e.formula.to_string(),
            constants.join(";"),
            e.core.to_string(),
        ]);
    }
    t
}

#[derive(Parser, Debug)]
#[command(name = "sdrelax", version, about = "Relaxed energies of structured deformations")]
struct Args {
    command: Command,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point of the binary; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let ov = match Overrides::from_env(args.seed, args.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("sdrelax: {e}");
            return e.exit_code();
        }
    };
    let result = match (args.command, &args.config) {
        (Command::Catalog, None) => {
            let csv = list_catalog().to_csv(&hex::encode(&Sha256::digest(b"catalog")[..8]));
            match csv {
                Ok(bytes) => {
                    print!("{}", String::from_utf8_lossy(&bytes));
                    return 0;
                }
                Err(e) => Err(e),
            }
        }
        (_, None) => Err(CliError::Config("--config <path> is required".into())),
        (c, Some(path)) => run_config(path, Some(c), &ov),
    };
    match result {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("sdrelax: {e}");
            e.exit_code()
        }
    }
}
