//! Parameter sweeps written as `key=start:end[:step]`.

use std::str::FromStr;

use rydrep_core::rates::PARAM_KEYS;

use crate::Error;

/// Points used when a real-valued sweep gives no step.
pub const DEFAULT_POINTS: usize = 21;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    pub start: f64,
    pub end: f64,
    pub step: Option<f64>,
}

impl SweepSpec {
    fn is_count(&self) -> bool {
        self.key.starts_with("n_")
    }

    /// Grid points from `start` to `end` inclusive. Step counts default to
    /// a step of 1, real parameters to [`DEFAULT_POINTS`] points.
    pub fn values(&self) -> Vec<f64> {
        let span = self.end - self.start;
        let step = match self.step {
            Some(s) => s,
            None if self.is_count() => 1.0,
            None if span == 0.0 => return vec![self.start],
            None => span / (DEFAULT_POINTS - 1) as f64,
        };
        let n = (span / step + 1e-9).floor() as usize;
        // Index-based so the grid carries no accumulated rounding.
        (0..=n)
            .map(|i| {
                if i == n && (self.start + i as f64 * step - self.end).abs() < 1e-9 * step.abs() {
                    self.end
                } else {
                    self.start + i as f64 * step
                }
            })
            .collect()
    }
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = |msg: &str| Error::Config(format!("sweep `{s}`: {msg}"));
        let (key, range) = s.split_once('=').ok_or_else(|| bad("expected key=start:end[:step]"))?;
        let key = key.trim();
        if !PARAM_KEYS.contains(&key) {
            return Err(bad("unknown parameter"));
        }
        let parts: Vec<f64> = range
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("bounds must be numbers")))
            .collect::<Result<_, _>>()?;
        let (start, end, step) = match parts[..] {
            [a, b] => (a, b, None),
            [a, b, c] => (a, b, Some(c)),
            _ => return Err(bad("expected start:end or start:end:step")),
        };
        if !(start.is_finite() && end.is_finite()) || end < start {
            return Err(bad("need finite bounds with start <= end"));
        }
        if let Some(st) = step {
            if !(st > 0.0 && st.is_finite()) {
                return Err(bad("step must be positive"));
            }
        }
        let spec = SweepSpec { key: key.to_string(), start, end, step };
        if spec.is_count() && spec.values().iter().any(|v| v.fract() != 0.0) {
            return Err(bad("step counts need whole-number grid points"));
        }
        Ok(spec)
    }
}
