//! Linear-optics Bell-state analyzer.
//!
//! Two photons enter a polarizing beam splitter (H transmits, V reflects)
//! from opposite input ports. Each output arm passes a half-wave plate at
//! 22.5 degrees and a second PBS; detectors D1/D2 are the H/V ports of arm 1
//! and D3/D4 the H/V ports of arm 2. Reflection at a PBS carries the phase
//! `reflect_phase` (default `i`), which is what puts the D1&D4 / D2&D3
//! coincidences on the `+` Bell state.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::float;
use crate::ket::BasisKet;
use crate::mode::Polarization;
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Detector {
    D1,
    D2,
    D3,
    D4,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::D1, Detector::D2, Detector::D3, Detector::D4];

    pub const fn arm(self) -> u8 {
        match self {
            Detector::D1 | Detector::D2 => 1,
            Detector::D3 | Detector::D4 => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Detector> {
        Self::ALL.get(i).copied()
    }
}

/// Heralded projection implied by a detector pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Herald {
    /// `(|uu> + |dd>)/sqrt2`
    PhiPlus,
    /// `(|uu> - |dd>)/sqrt2`
    PhiMinus,
    /// Both photons left through one output arm; the pattern is discarded.
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BellOutcome {
    pub kind: Herald,
    /// Firing detectors; equal entries mean both photons hit one detector.
    pub detectors: (Detector, Detector),
    pub probability: f64,
}

#[derive(Debug, Clone)]
pub struct AnalyzerBranch {
    pub outcome: BellOutcome,
    /// Renormalized memory state with both photons removed.
    pub projected: StateVector,
}

/// Coincidence classification: D1&D4 and D2&D3 herald `+`, D1&D3 and D2&D4
/// herald `-`, everything else is lost.
pub fn classify_coincidence(a: Detector, b: Detector) -> Herald {
    use Detector::*;
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    match (a, b) {
        (D1, D4) | (D2, D3) => Herald::PhiPlus,
        (D1, D3) | (D2, D4) => Herald::PhiMinus,
        _ => Herald::Lost,
    }
}

/// Input modes, in column order of [`AnalyzerConfig::transfer_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    Port1H,
    Port1V,
    Port2H,
    Port2V,
}

impl InputMode {
    pub fn new(port: u8, pol: Polarization) -> Option<InputMode> {
        match (port, pol) {
            (1, Polarization::H) => Some(InputMode::Port1H),
            (1, Polarization::V) => Some(InputMode::Port1V),
            (2, Polarization::H) => Some(InputMode::Port2H),
            (2, Polarization::V) => Some(InputMode::Port2V),
            _ => None,
        }
    }
}

pub type TransferMatrix = [[Complex64; 4]; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerConfig {
    /// Half-wave-plate fast-axis angle in degrees (22.5 rotates H by 45 degrees).
    pub hwp_angle_deg: f64,
    /// Amplitude factor picked up on reflection at a PBS.
    pub reflect_phase: Complex64,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig { hwp_angle_deg: 22.5, reflect_phase: Complex64::new(0.0, 1.0) }
    }
}

impl AnalyzerConfig {
    /// Single-photon map from input modes (columns) to detectors (rows).
    pub fn transfer_matrix(&self) -> TransferMatrix {
        let two_theta = 2.0 * self.hwp_angle_deg.to_radians();
        let (c, s) = (float::cos(two_theta), float::sin(two_theta));
        let r = self.reflect_phase;
        let one = Complex64::new(1.0, 0.0);
        // Half-wave plate Jones matrix: H -> (c, s), V -> (s, -c).
        let hwp = |h: Complex64, v: Complex64| (h * c + v * s, h * s - v * c);
        // Arm field (H, V) after the plate, split at the second PBS.
        let out = |h: Complex64, v: Complex64| {
            let (ho, vo) = hwp(h, v);
            (ho, vo * r)
        };
        let zero = Complex64::new(0.0, 0.0);
        let mut m = [[zero; 4]; 4];
        // Port 1: H transmits into arm 1, V reflects into arm 2.
        let (d1, d2) = out(one, zero);
        m[0][0] = d1;
        m[1][0] = d2;
        let (d3, d4) = out(zero, r);
        m[2][1] = d3;
        m[3][1] = d4;
        // Port 2: H transmits into arm 2, V reflects into arm 1.
        let (d3, d4) = out(one, zero);
        m[2][2] = d3;
        m[3][2] = d4;
        let (d1, d2) = out(zero, r);
        m[0][3] = d1;
        m[1][3] = d2;
        m
    }

    /// Two-photon amplitude for detectors `(i, j)`, `i <= j`, given one photon
    /// in each of two input modes. Same-detector amplitudes carry the bosonic
    /// `sqrt2` so the output basis is orthonormal.
    pub fn pair_amplitude(
        &self,
        m: &TransferMatrix,
        in1: InputMode,
        in2: InputMode,
        i: Detector,
        j: Detector,
    ) -> Complex64 {
        let (a, b) = (in1 as usize, in2 as usize);
        let (i, j) = (i as usize, j as usize);
        if i == j {
            m[i][a] * m[i][b] * core::f64::consts::SQRT_2
        } else {
            m[i][a] * m[j][b] + m[j][a] * m[i][b]
        }
    }

    /// The ten ordered detector pairs `(i <= j)`.
    pub fn detector_pairs() -> impl Iterator<Item = (Detector, Detector)> {
        Detector::ALL.into_iter().flat_map(|a| Detector::ALL.into_iter().filter(move |b| a <= *b).map(move |b| (a, b)))
    }
}

/// Sends the two photons of `joint` through the analyzer.
///
/// The photon from the lower-numbered node enters port 1. Returns every
/// detector pattern with nonzero probability together with the projected,
/// renormalized memory state.
pub fn analyze(joint: &StateVector, config: &AnalyzerConfig) -> Result<Vec<AnalyzerBranch>> {
    let mut pair_nodes: Option<(usize, usize)> = None;
    for (ket, _) in joint.terms() {
        let ph = ket.photons();
        if ph.len() != 2 {
            return Err(invalid!("analyzer needs exactly 2 photons per term, found {} in `{ket}`", ph.len()));
        }
        let nodes = (ph[0].source_node.min(ph[1].source_node), ph[0].source_node.max(ph[1].source_node));
        if nodes.0 == nodes.1 {
            return Err(invalid!("both photons come from node {}", nodes.0));
        }
        if ph.iter().any(|p| !p.polarization.is_linear()) {
            return Err(invalid!("photons must be H/V polarized before the analyzer"));
        }
        match pair_nodes {
            None => pair_nodes = Some(nodes),
            Some(n) if n != nodes => return Err(invalid!("photon source nodes differ between terms")),
            Some(_) => {}
        }
    }
    let (port1_node, _) = pair_nodes.ok_or_else(|| invalid!("empty state"))?;

    let m = config.transfer_matrix();
    let mut branches: BTreeMap<(Detector, Detector), Vec<(BasisKet, Complex64)>> = BTreeMap::new();
    for (ket, amp) in joint.terms() {
        let ph = ket.photons();
        let (p1, p2) = if ph[0].source_node == port1_node { (ph[0], ph[1]) } else { (ph[1], ph[0]) };
        let in1 = InputMode::new(1, p1.polarization).expect("linear polarization");
        let in2 = InputMode::new(2, p2.polarization).expect("linear polarization");
        let memory = ket.clone().retain_photons(|p| *p != p1 && *p != p2);
        for (i, j) in AnalyzerConfig::detector_pairs() {
            let a = config.pair_amplitude(&m, in1, in2, i, j);
            if a.norm() > 0.0 {
                branches.entry((i, j)).or_default().push((memory.clone(), a * amp));
            }
        }
    }

    let total = joint.norm_sqr();
    let mut out = Vec::new();
    for ((i, j), terms) in branches {
        let projected = StateVector::from_terms(joint.num_nodes(), terms)?.with_prune_epsilon(joint.prune_epsilon());
        let weight = projected.norm_sqr();
        if weight < 1e-24 {
            continue;
        }
        out.push(AnalyzerBranch {
            outcome: BellOutcome { kind: classify_coincidence(i, j), detectors: (i, j), probability: weight / total },
            projected: projected.normalized()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ket::PhotonRecord;
    use crate::mode::ModeLabel;

    fn photon(node: usize, pol: Polarization, slot: u32) -> PhotonRecord {
        PhotonRecord { source_node: node, polarization: pol, slot }
    }

    #[test]
    fn classification_table() {
        use Detector::*;
        assert_eq!(classify_coincidence(D1, D4), Herald::PhiPlus);
        assert_eq!(classify_coincidence(D4, D1), Herald::PhiPlus);
        assert_eq!(classify_coincidence(D2, D3), Herald::PhiPlus);
        assert_eq!(classify_coincidence(D1, D3), Herald::PhiMinus);
        assert_eq!(classify_coincidence(D2, D4), Herald::PhiMinus);
        assert_eq!(classify_coincidence(D1, D2), Herald::Lost);
        assert_eq!(classify_coincidence(D3, D4), Herald::Lost);
        for d in Detector::ALL {
            assert_eq!(classify_coincidence(d, d), Herald::Lost);
        }
    }

    #[test]
    fn transfer_matrix_is_unitary() {
        let m = AnalyzerConfig::default().transfer_matrix();
        for i in 0..4 {
            for j in 0..4 {
                let dot: Complex64 = (0..4).map(|k| m[i][k] * m[j][k].conj()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - Complex64::new(want, 0.0)).norm() < 1e-12, "({i},{j}) = {dot}");
            }
        }
    }

    #[test]
    fn hh_input_never_loses_to_one_arm() {
        let ket =
            BasisKet::vacuum(2).with_photon(photon(0, Polarization::H, 0)).with_photon(photon(1, Polarization::H, 1));
        let s = StateVector::from_terms(2, [(ket, Complex64::new(1.0, 0.0))]).unwrap();
        let branches = analyze(&s, &AnalyzerConfig::default()).unwrap();
        assert!(branches.iter().all(|b| b.outcome.detectors.0.arm() != b.outcome.detectors.1.arm()));
        let total: f64 = branches.iter().map(|b| b.outcome.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_photon_count() {
        let ket = BasisKet::vacuum(2).with_mode(0, ModeLabel::U).with_photon(photon(0, Polarization::H, 0));
        let s = StateVector::from_terms(2, [(ket, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(analyze(&s, &AnalyzerConfig::default()).is_err());
    }

    #[test]
    fn rejects_circular_polarization() {
        let ket = BasisKet::vacuum(2).with_photon(photon(0, Polarization::SigmaPlus, 0)).with_photon(photon(
            1,
            Polarization::H,
            1,
        ));
        let s = StateVector::from_terms(2, [(ket, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(analyze(&s, &AnalyzerConfig::default()).is_err());
    }
}
