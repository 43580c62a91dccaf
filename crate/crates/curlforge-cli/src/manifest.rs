//! The JSON sidecar written next to every simulated trajectory.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Everything needed to reproduce a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub system: String,
    pub params: BTreeMap<String, f64>,
    pub potential: Option<String>,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub csv_path: String,
    pub manifest_path: String,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Parse a manifest back; float parsing is exact (`float_roundtrip`).
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
