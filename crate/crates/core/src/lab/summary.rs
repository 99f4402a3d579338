use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One Monte Carlo result, written as a single JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub blocks: usize,
    pub estimate: f64,
    pub stderr: f64,
}

/// SHA-256 (hex) of the JSON encoding of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value).map_err(|e| Error::Io(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl McSummary {
    pub fn write_line<W: Write>(&self, mut out: W) -> Result<()> {
        let line = serde_json::to_string(self).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
        Ok(())
    }
}
