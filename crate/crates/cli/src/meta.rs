//! Run metadata, content hashing and cache paths.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use qktsne_core::io;
use qktsne_core::simulator::ExecCounts;
use qktsne_core::KernelData;

use crate::{CliError, CliResult, GlobalArgs};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub state_preparations: u64,
    pub fidelity_evaluations: u64,
}

impl From<ExecCounts> for Counts {
    fn from(c: ExecCounts) -> Self {
        Self {
            state_preparations: c.state_preparations,
            fidelity_evaluations: c.fidelity_evaluations,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Formats {
    pub gram_cache: String,
    pub statevectors: String,
    pub model: &'static str,
    pub scaler: &'static str,
    pub trajectory: &'static str,
    pub embedding_csv: u32,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            gram_cache: format!("QKTS v{}", io::GRAM_VERSION),
            statevectors: format!("QKSV v{}", io::STATES_VERSION),
            model: io::MODEL_HEADER,
            scaler: io::SCALER_HEADER,
            trajectory: io::TRAJECTORY_HEADER,
            embedding_csv: io::EMBEDDING_CSV_VERSION,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'static str,
    pub seed: u64,
    pub global: &'a GlobalArgs,
    pub config: &'a C,
    pub formats: Formats,
    /// Executions per pipeline phase.
    pub counters: BTreeMap<&'static str, Counts>,
    /// Final totals of the run's counter.
    pub counter_totals: Counts,
    pub results: R,
}

impl<'a, C: Serialize, R: Serialize> Metadata<'a, C, R> {
    pub fn new(command: &'a str, global: &'a GlobalArgs, config: &'a C, results: R) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: global.seed,
            global,
            config,
            formats: Formats::default(),
            counters: BTreeMap::new(),
            counter_totals: Counts::default(),
            results,
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(format!("{}-metadata.json", self.command));
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Data(e.to_string()))?;
        write_text(&path, &(text + "\n"))?;
        Ok(path)
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| qktsne_core::Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| {
        qktsne_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

/// SHA-256 of the kernel descriptor followed by the raw little-endian bytes
/// of the kernel inputs.
pub fn gram_key(descriptor: &str, data: &KernelData) -> String {
    let mut h = Sha256::new();
    h.update(descriptor.as_bytes());
    h.update([0u8]);
    match data {
        KernelData::States(states) => {
            h.update(b"states");
            h.update((states.len() as u64).to_le_bytes());
            for s in states {
                h.update((s.n_qubits() as u64).to_le_bytes());
                for a in s.amplitudes() {
                    h.update(a.re.to_le_bytes());
                    h.update(a.im.to_le_bytes());
                }
            }
        }
        KernelData::Features(f) => {
            h.update(b"features");
            h.update((f.nrows() as u64).to_le_bytes());
            h.update((f.ncols() as u64).to_le_bytes());
            for v in f.iter() {
                h.update(v.to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}

pub fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("plain data serializes");
    hex::encode(Sha256::digest(bytes))
}

pub fn cache_dir(global: &GlobalArgs) -> PathBuf {
    global.out.join("cache")
}
