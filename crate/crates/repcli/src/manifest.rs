//! Run manifests embedded in every output file.
//!
//! Data files carry everything except the timestamp, so re-running a
//! command reproduces them byte for byte. The timestamp goes to stderr or to
//! a separate manifest file.

use std::path::PathBuf;

use serde::Serialize;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub output_paths: Vec<PathBuf>,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        RunManifest {
            command: command.into(),
            config_path: None,
            seed: None,
            output_paths: Vec::new(),
            tool_version: TOOL_VERSION.to_string(),
            timestamp: None,
        }
    }

    /// Copy without the timestamp, for embedding in data files.
    pub fn for_data(&self) -> RunManifest {
        RunManifest { timestamp: None, ..self.clone() }
    }

    pub fn stamped(mut self) -> RunManifest {
        self.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
        self
    }

    /// `# key: value` lines for the head of a CSV file.
    pub fn csv_comment(&self) -> String {
        let m = self.for_data();
        let path_list = |v: &[PathBuf]| v.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        s.push_str(&format!("# command: {}\n", m.command));
        if let Some(c) = &m.config_path {
            s.push_str(&format!("# config: {}\n", c.display()));
        }
        if let Some(seed) = m.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        if !m.output_paths.is_empty() {
            s.push_str(&format!("# outputs: {}\n", path_list(&m.output_paths)));
        }
        s.push_str(&format!("# tool: {}\n", m.tool_version));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_copy_drops_timestamp() {
        let mut m = RunManifest::new("rates --preset optimistic").stamped();
        m.seed = Some(7);
        assert!(m.timestamp.is_some());
        assert!(m.for_data().timestamp.is_none());
        let c = m.csv_comment();
        assert!(c.lines().all(|l| l.starts_with("# ")));
        assert!(c.contains("seed: 7"));
        let json = serde_json::to_string(&m.for_data()).unwrap();
        assert!(!json.contains("timestamp"));
    }
}
