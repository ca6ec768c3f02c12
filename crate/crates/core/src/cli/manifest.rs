//! Run manifest: what was run, with which inputs, and what it wrote.
//!
//! Plain `key = value` lines in a fixed order and no timestamps, so the same
//! run always writes the same manifest.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};

pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub version: String,
    /// Every command that wrote into the directory, in order.
    pub commands: Vec<String>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub gamma_hat: Option<f64>,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

impl RunManifest {
    pub fn new(command: String) -> Self {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            commands: vec![command],
            ..Default::default()
        }
    }

    pub fn add_output(&mut self, name: &str) {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
    }

    pub fn add_command(&mut self, command: String) {
        if !self.commands.contains(&command) {
            self.commands.push(command);
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "version = {}", self.version);
        for c in &self.commands {
            let _ = writeln!(s, "command = {c}");
        }
        if let Some(h) = &self.config_hash {
            let _ = writeln!(s, "config_hash = sha256:{h}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        if let Some(g) = self.gamma_hat {
            // Shortest round-trip form, so a reader recovers the exact value.
            let _ = writeln!(s, "gamma_hat = {g}");
        }
        for o in &self.outputs {
            let _ = writeln!(s, "output = {o}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = RunManifest::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse { line, message };
            let (k, v) = raw
                .split_once(" = ")
                .ok_or_else(|| bad(format!("expected 'key = value', found '{raw}'")))?;
            match k {
                "version" => m.version = v.to_string(),
                "command" => m.commands.push(v.to_string()),
                "config_hash" => {
                    let h = v
                        .strip_prefix("sha256:")
                        .ok_or_else(|| bad("config_hash must start with 'sha256:'".into()))?;
                    m.config_hash = Some(h.to_string());
                }
                "seed" => m.seed = Some(v.parse().map_err(|_| bad(format!("bad seed '{v}'")))?),
                "gamma_hat" => {
                    let g: f64 = v.parse().map_err(|_| bad(format!("bad gamma_hat '{v}'")))?;
                    m.gamma_hat = Some(g);
                }
                "output" => m.outputs.push(v.to_string()),
                _ => return Err(bad(format!("unknown manifest key '{k}'"))),
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }

    /// Manifest at `dir/manifest.txt` if one exists.
    pub fn load_dir(dir: &Path) -> Result<Option<Self>> {
        let p = dir.join(MANIFEST_NAME);
        if p.exists() {
            Self::load(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(MANIFEST_NAME), self.render().as_bytes())
    }
}
