//! Flat `key=value` parameter files.
//!
//! Keys match the rate-model parameter names (`P_R`, `P_gamma`, `P_B`,
//! `t_o`, `n_G`, `n_T`, `n_S`, `d`, `c_fiber`, `OD`). Blank lines and
//! `#` comments are ignored. Values resolve with precedence
//! command line > file > preset.

use std::fs;
use std::path::Path;

use rydrep_core::rates::{EfficiencyParams, Preset, PARAM_KEYS};

use crate::Error;

/// One `key=value` assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub key: String,
    pub value: f64,
}

impl std::str::FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got `{s}`")))?;
        let key = k.trim();
        if !PARAM_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown parameter `{key}` (known: {})", PARAM_KEYS.join(", "))));
        }
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("value for `{key}` is not a number: `{}`", v.trim())))?;
        Ok(Assignment { key: key.to_string(), value })
    }
}

pub fn parse_config(text: &str) -> Result<Vec<Assignment>, Error> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let a: Assignment = line.parse().map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        if out.iter().any(|b: &Assignment| b.key == a.key) {
            return Err(Error::Config(format!("line {}: `{}` set twice", i + 1, a.key)));
        }
        out.push(a);
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<Vec<Assignment>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Preset values, overridden by the file, overridden by `fixes`.
pub fn resolve_params(preset: Preset, file: &[Assignment], fixes: &[Assignment]) -> Result<EfficiencyParams, Error> {
    let mut p = preset.params();
    for a in file.iter().chain(fixes) {
        p.set(&a.key, a.value)?;
    }
    p.validate()?;
    Ok(p)
}

/// Serializes every parameter in the file format.
pub fn to_config_text(p: &EfficiencyParams) -> String {
    PARAM_KEYS.iter().filter_map(|k| p.get(k).ok().filter(|v| !v.is_nan()).map(|v| format!("{k}={v:?}\n"))).collect()
}
