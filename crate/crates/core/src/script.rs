//! Plain-text pulse scripts.
//!
//! One step per line, `kind node from to [flags]`:
//!
//! ```text
//! # comment
//! pi 0 g R_d collective label=ii
//! half_pi 0 R_d R_u
//! raman 0 R_d u_t theta=3.141592653589793 phi=0
//! readout 0 R_d e_d
//! waveplate 0
//! ```
//!
//! Flags are `collective`, `theta=<rad>`, `phi=<rad>` and `label=<text>`.
//! A waveplate line takes only a node. Parsed scripts carry no expected
//! rows.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::mode::Level;
use crate::protocol::{ProtocolScript, ScriptStep};
use crate::pulse::{PulseKind, PulseOp, Step};

fn parse_err(line: usize, msg: impl core::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn kind_name(kind: PulseKind) -> &'static str {
    match kind {
        PulseKind::Pi => "pi",
        PulseKind::HalfPi => "half_pi",
        PulseKind::TwoPi => "two_pi",
        PulseKind::Raman { .. } => "raman",
        PulseKind::Readout => "readout",
    }
}

/// Serializes `script` one step per line. Floats use the shortest form that
/// parses back to the same value.
pub fn to_text(script: &ProtocolScript) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", script.name);
    for s in &script.steps {
        match s.step {
            Step::Waveplate { node } => {
                let _ = write!(out, "waveplate {node}");
            }
            Step::Pulse(op) => {
                let _ = write!(out, "{} {} {} {}", kind_name(op.kind), op.node, op.from, op.to);
                if let PulseKind::Raman { theta, phase } = op.kind {
                    let _ = write!(out, " theta={theta:?} phi={phase:?}");
                }
                if op.collective {
                    out.push_str(" collective");
                }
            }
        }
        if !s.label.is_empty() {
            let _ = write!(out, " label={}", s.label);
        }
        out.push('\n');
    }
    out
}

/// Parses the format written by [`to_text`].
pub fn from_text(name: &str, text: &str) -> Result<ProtocolScript> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let kind = fields.next().expect("nonempty line");
        let node: usize = fields
            .next()
            .ok_or_else(|| parse_err(line_no, "missing node"))?
            .parse()
            .map_err(|_| parse_err(line_no, "node must be a non-negative integer"))?;
        let mut theta = None;
        let mut phi = None;
        let mut collective = false;
        let mut label = String::new();
        let mut levels: Vec<Level> = Vec::new();
        for f in fields {
            if let Some(v) = f.strip_prefix("theta=") {
                theta = Some(v.parse::<f64>().map_err(|_| parse_err(line_no, format!("bad theta `{v}`")))?);
            } else if let Some(v) = f.strip_prefix("phi=") {
                phi = Some(v.parse::<f64>().map_err(|_| parse_err(line_no, format!("bad phi `{v}`")))?);
            } else if let Some(v) = f.strip_prefix("label=") {
                label = v.to_string();
            } else if f == "collective" {
                collective = true;
            } else {
                levels.push(f.parse().map_err(|_| parse_err(line_no, format!("unknown level or flag `{f}`")))?);
            }
        }
        let step = if kind == "waveplate" {
            if !levels.is_empty() || theta.is_some() || phi.is_some() || collective {
                return Err(parse_err(line_no, "waveplate takes only a node"));
            }
            Step::Waveplate { node }
        } else {
            let [from, to] = levels[..] else {
                return Err(parse_err(line_no, "expected exactly two levels"));
            };
            let pulse_kind = match kind {
                "pi" => PulseKind::Pi,
                "half_pi" => PulseKind::HalfPi,
                "two_pi" => PulseKind::TwoPi,
                "readout" => PulseKind::Readout,
                "raman" => PulseKind::Raman {
                    theta: theta.ok_or_else(|| parse_err(line_no, "raman needs theta="))?,
                    phase: phi.unwrap_or(0.0),
                },
                other => return Err(parse_err(line_no, format!("unknown pulse kind `{other}`"))),
            };
            if !matches!(pulse_kind, PulseKind::Raman { .. }) && (theta.is_some() || phi.is_some()) {
                return Err(parse_err(line_no, "theta/phi only apply to raman pulses"));
            }
            let mut op = PulseOp::new(pulse_kind, node, from, to);
            op.collective = collective;
            op.validate().map_err(|e| parse_err(line_no, e))?;
            Step::Pulse(op)
        };
        steps.push(ScriptStep { label, step });
    }
    if steps.is_empty() {
        return Err(Error::Parse("script has no steps".to_string()));
    }
    Ok(ProtocolScript { name: name.to_string(), steps, expected: Vec::new() })
}
