//! Run manifests: every command serializes the exact inputs needed to
//! reproduce its outputs. `replay` re-executes a manifest; the listed output
//! files are byte-identical across replays (fixed grids, fixed seeds; wall
//! time lives only in the manifest itself).

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub problem: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub alpha_deg: Option<f64>,
    #[serde(default)]
    pub y: Option<f64>,
    #[serde(default)]
    pub h_list: Vec<f64>,
    #[serde(default)]
    pub lambda0: Option<(f64, f64)>,
    #[serde(default)]
    pub lambda1: Option<(f64, f64)>,
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub components: Vec<usize>,
    #[serde(default)]
    pub expect: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub out: PathBuf,
    /// Deterministic output files produced by the run.
    #[serde(default)]
    pub outputs: Vec<PathBuf>,
    /// Diagnostic only; not reproduced by replay.
    #[serde(default)]
    pub wall_time_ms: Option<u128>,
}

impl RunManifest {
    pub fn new(command: &str, out: PathBuf) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            methods: Vec::new(),
            problem: None,
            n: None,
            epsilon: None,
            alpha_deg: None,
            y: None,
            h_list: Vec::new(),
            lambda0: None,
            lambda1: None,
            kind: None,
            components: Vec::new(),
            expect: None,
            seed: 0,
            out,
            outputs: Vec::new(),
            wall_time_ms: None,
        }
    }
}
