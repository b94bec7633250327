use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Command, RunArgs};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct ConfigEcho<'a> {
    command: Command,
    #[serde(flatten)]
    args: &'a RunArgs,
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'a str,
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
}

/// Output directory of one run. Every file gets a `<name>.meta.json`
/// sidecar carrying the version, command, config hash and master seed.
pub struct RunOutput {
    dir: PathBuf,
    command: Command,
    config_hash: String,
    seed: u64,
    written: Vec<PathBuf>,
}

impl RunOutput {
    /// Creates the directory and writes the `config.json` echo, which
    /// re-runs the command when passed back through --config.
    pub fn create(command: Command, args: &RunArgs) -> Result<Self, CliError> {
        let dir = args.out_dir();
        fs::create_dir_all(&dir)?;
        let echo = serde_json::to_vec_pretty(&ConfigEcho { command, args })?;
        let config_hash = Sha256::digest(&echo).iter().map(|b| format!("{b:02x}")).collect();
        let mut out = Self { dir, command, config_hash, seed: args.seed(), written: Vec::new() };
        out.write_bytes("config.json", &echo)?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write_with(name, |w| w.write_all(bytes).map_err(CliError::from))
    }

    pub fn write_with<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        let path = self.path(name);
        let mut w = BufWriter::new(fs::File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        self.write_sidecar(&path)?;
        self.written.push(path);
        Ok(())
    }

    fn write_sidecar(&self, path: &Path) -> Result<(), CliError> {
        let meta = Meta {
            version: VERSION,
            command: self.command.name(),
            config_hash: &self.config_hash,
            seed: self.seed,
        };
        let mut name = path.file_name().expect("file path").to_os_string();
        name.push(".meta.json");
        let mut bytes = serde_json::to_vec_pretty(&meta)?;
        bytes.push(b'\n');
        fs::write(path.with_file_name(name), bytes)?;
        Ok(())
    }
}
