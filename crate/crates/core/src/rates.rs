//! Closed-form and recursive mean times for entanglement generation and
//! teleportation, two-node and multi-node.
//!
//! Every result has the shape `T = t / P`: an attempt time over a success
//! probability. Recursive schemes fold the previous stage's mean time into
//! `t`.

use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::float;

/// Protocol and hardware parameters. Times in seconds, distances in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EfficiencyParams {
    /// Success probability of one transition through a Rydberg level.
    pub p_r: f64,
    /// Photon collection probability.
    pub p_gamma: f64,
    /// Probability that the Bell analyzer gives a useful herald.
    pub p_b: f64,
    /// Duration of one operation.
    pub t_o: f64,
    pub n_g: u32,
    pub n_t: u32,
    pub n_s: u32,
    /// Node separation.
    pub d: f64,
    /// Speed of light in fiber.
    pub c_fiber: f64,
    /// Optical depth, informational only; `p_gamma` is never derived from it.
    pub od: Option<f64>,
}

/// Config keys, in the order used for display.
pub const PARAM_KEYS: [&str; 10] = ["P_R", "P_gamma", "P_B", "t_o", "n_G", "n_T", "n_S", "d", "c_fiber", "OD"];

impl Default for EfficiencyParams {
    fn default() -> Self {
        Preset::Conservative.params()
    }
}

impl EfficiencyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("P_R", self.p_r), ("P_gamma", self.p_gamma), ("P_B", self.p_b)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(invalid!("{name} = {p} is not in (0, 1]"));
            }
        }
        for (name, t) in [("t_o", self.t_o), ("d", self.d)] {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid!("{name} = {t} must be finite and >= 0"));
            }
        }
        if !(self.c_fiber > 0.0 && self.c_fiber.is_finite()) {
            return Err(invalid!("c_fiber = {} must be positive", self.c_fiber));
        }
        if self.n_g < 1 {
            return Err(invalid!("n_G must be at least 1"));
        }
        if let Some(od) = self.od {
            if od.is_nan() || od <= 0.0 {
                return Err(invalid!("OD = {od} must be positive"));
            }
        }
        Ok(())
    }

    /// Round-trip light time `2d/c`.
    pub fn round_trip(&self) -> f64 {
        2.0 * self.d / self.c_fiber
    }

    /// Reads a parameter by config key.
    pub fn get(&self, key: &str) -> Result<f64> {
        Ok(match key {
            "P_R" => self.p_r,
            "P_gamma" => self.p_gamma,
            "P_B" => self.p_b,
            "t_o" => self.t_o,
            "n_G" => self.n_g as f64,
            "n_T" => self.n_t as f64,
            "n_S" => self.n_s as f64,
            "d" => self.d,
            "c_fiber" => self.c_fiber,
            "OD" => self.od.unwrap_or(f64::NAN),
            _ => return Err(invalid!("unknown parameter `{key}`")),
        })
    }

    /// Sets a parameter by config key. Step counts must be whole numbers.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let count = |v: f64| -> Result<u32> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(invalid!("{key} = {v} is not a whole number"))
            }
        };
        match key {
            "P_R" => self.p_r = value,
            "P_gamma" => self.p_gamma = value,
            "P_B" => self.p_b = value,
            "t_o" => self.t_o = value,
            "n_G" => self.n_g = count(value)?,
            "n_T" => self.n_t = count(value)?,
            "n_S" => self.n_s = count(value)?,
            "d" => self.d = value,
            "c_fiber" => self.c_fiber = value,
            "OD" => self.od = Some(value),
            _ => return Err(invalid!("unknown parameter `{key}`")),
        }
        Ok(())
    }

    /// Attempt time of two-node generation: `(n_G - 1) t_o + 2d/c`, the
    /// two readouts running simultaneously.
    pub fn t_g(&self) -> f64 {
        (self.n_g as f64 - 1.0) * self.t_o + self.round_trip()
    }

    /// `(P_R^n P_gamma^2)^2 P_B` for a preparation of `n` steps per node.
    fn herald_probability(&self, n: u32) -> f64 {
        let per_node = float::powi(self.p_r, n as i32) * self.p_gamma * self.p_gamma;
        per_node * per_node * self.p_b
    }

    pub fn p_g(&self) -> f64 {
        self.herald_probability(self.n_g)
    }

    pub fn p_s(&self) -> f64 {
        self.herald_probability(self.n_s)
    }

    pub fn t_t(&self) -> f64 {
        self.n_t as f64 * self.t_o + self.round_trip()
    }

    pub fn p_t(&self) -> f64 {
        float::powi(self.p_r, self.n_t as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Preset {
    Conservative,
    Optimistic,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Conservative, Preset::Optimistic];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Conservative => "conservative",
            Preset::Optimistic => "optimistic",
        }
    }

    pub fn params(self) -> EfficiencyParams {
        let (p_r, p_gamma) = match self {
            Preset::Conservative => (0.79, 0.3),
            Preset::Optimistic => (0.9, 0.8),
        };
        EfficiencyParams { p_r, p_gamma, p_b: 0.5, t_o: 1e-6, n_g: 7, n_t: 7, n_s: 7, d: 0.0, c_fiber: 2e8, od: None }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(alloc::format!("unknown preset `{s}`")))
    }
}

/// Mean time of a protocol, `mean_time = attempt_time / success_probability`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateResult {
    pub attempt_time: f64,
    pub success_probability: f64,
    pub mean_time: f64,
    pub rate: f64,
}

impl RateResult {
    pub fn new(attempt_time: f64, success_probability: f64) -> Self {
        let mean_time = attempt_time / success_probability;
        RateResult { attempt_time, success_probability, mean_time, rate: 1.0 / mean_time }
    }
}

/// Multi-node evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    Recursion,
    ClosedForm,
}

/// Collection efficiency from optical depth, `1 - sqrt(4/pi)/sqrt(OD)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionEfficiency {
    pub value: f64,
    /// Set when the formula went non-positive and the value was clamped to 0.
    pub clamped: bool,
}

pub fn p_gamma_from_od(od: f64) -> Result<CollectionEfficiency> {
    if od.is_nan() || od <= 0.0 || !od.is_finite() {
        return Err(invalid!("optical depth must be positive and finite, got {od}"));
    }
    let raw = 1.0 - float::sqrt(4.0 / core::f64::consts::PI) / float::sqrt(od);
    if raw <= 0.0 {
        Ok(CollectionEfficiency { value: 0.0, clamped: true })
    } else {
        Ok(CollectionEfficiency { value: raw, clamped: false })
    }
}

pub fn two_node_generation(p: &EfficiencyParams) -> RateResult {
    RateResult::new(p.t_g(), p.p_g())
}

/// Repetition limit set by the full atomic sequence plus the round trip.
pub fn max_rep_rate(p: &EfficiencyParams) -> f64 {
    1.0 / (p.n_g as f64 * p.t_o + p.round_trip())
}

/// Round-trip light limit `c/(2d)`; infinite at zero distance.
pub fn light_limited_rate(p: &EfficiencyParams) -> f64 {
    let rt = p.round_trip();
    if rt == 0.0 {
        f64::INFINITY
    } else {
        1.0 / rt
    }
}

/// Generation followed by one teleportation attempt; a failed attempt
/// starts over from generation.
pub fn two_node_teleportation(p: &EfficiencyParams) -> RateResult {
    let t_g = two_node_generation(p).mean_time;
    RateResult::new(t_g + p.t_t(), p.p_t())
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        Err(invalid!("n counts links (nodes - 1) and must be at least 1"))
    } else {
        Ok(())
    }
}

/// Entanglement over `n` links by probabilistic photonic swapping.
pub fn multi_node_generation(p: &EfficiencyParams, n: u32, method: Method) -> Result<RateResult> {
    check_n(n)?;
    Ok(match method {
        Method::ClosedForm => {
            let pg = p.p_g();
            RateResult::new(p.t_g(), float::powi(pg, n as i32) * (1.0 - pg))
        }
        Method::Recursion => {
            let mut r = two_node_generation(p);
            let step = p.n_s as f64 * p.t_o + p.round_trip();
            for _ in 1..n {
                r = RateResult::new(r.mean_time + step, p.p_s());
            }
            r
        }
    })
}

/// Nested deterministic swapping over `2^k` links: `(3/2)^k t_G / P_G`.
pub fn deterministic_swap_generation(p: &EfficiencyParams, k: u32) -> RateResult {
    RateResult::new(p.t_g(), p.p_g() / float::powi(1.5, k as i32))
}

/// Hop-by-hop teleportation along `n` links.
pub fn chain_teleportation(p: &EfficiencyParams, n: u32, method: Method) -> Result<RateResult> {
    check_n(n)?;
    let (pg, pt) = (p.p_g(), p.p_t());
    Ok(match method {
        Method::ClosedForm => {
            let q = pg * pt;
            RateResult::new(p.t_g(), float::powi(q, n as i32) * (1.0 - q))
        }
        Method::Recursion => {
            let mut r = two_node_teleportation(p);
            for _ in 1..n {
                // Pair generation on the next link, then one teleport try.
                let pair = (r.mean_time + p.t_g()) / pg;
                r = RateResult::new(pair + p.t_t(), pt);
            }
            r
        }
    })
}

/// Entanglement distributed end to end, then a single teleportation.
pub fn end_to_end_teleportation(p: &EfficiencyParams, n: u32, method: Method) -> Result<RateResult> {
    check_n(n)?;
    Ok(match method {
        Method::ClosedForm => {
            let pg = p.p_g();
            RateResult::new(p.t_g(), float::powi(pg, n as i32) * p.p_t() * (1.0 - pg))
        }
        Method::Recursion => {
            let g = multi_node_generation(p, n, Method::Recursion)?;
            RateResult::new(g.mean_time, p.p_t())
        }
    })
}

/// Closed-form ratio of hop-by-hop over end-to-end teleportation times,
/// `P_T^(1-n) (1 - P_G) / (1 - P_G P_T)`.
pub fn teleport_speedup(p: &EfficiencyParams, n: u32) -> Result<f64> {
    check_n(n)?;
    let (pg, pt) = (p.p_g(), p.p_t());
    Ok(float::powi(pt, 1 - n as i32) * (1.0 - pg) / (1.0 - pg * pt))
}

/// Generation rate at the current `n_G` over the rate at `n_G = 12`.
pub fn zhao_comparison(p: &EfficiencyParams) -> f64 {
    let ours = two_node_generation(p).rate;
    let theirs = two_node_generation(&EfficiencyParams { n_g: 12, ..*p }).rate;
    ours / theirs
}
