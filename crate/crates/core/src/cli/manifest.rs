use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::chain::ChainSpec;

/// Inputs and output digests of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub chain: Option<ChainSpec>,
    pub n_max: Option<usize>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub timestamp_unix: u64,
    /// SHA-256 of each written file, by file name.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(
        argv: &[String],
        chain: Option<ChainSpec>,
        n_max: Option<usize>,
        seed: Option<u64>,
        files: &[(String, Vec<u8>)],
    ) -> Self {
        RunManifest {
            command_line: argv.to_vec(),
            chain,
            n_max,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            outputs: files
                .iter()
                .map(|(name, bytes)| (name.clone(), hex::encode(Sha256::digest(bytes))))
                .collect(),
        }
    }
}
