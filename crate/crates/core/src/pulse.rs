//! Blockade-aware pulses acting on a [`StateVector`].

use crate::error::{invalid, protocol_err, Result};
use crate::ket::PhotonRecord;
use crate::mode::{Level, ModeLabel};
use crate::state::{Convention, Matrix2, Rotation, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PulseKind {
    Pi,
    HalfPi,
    TwoPi,
    Raman {
        theta: f64,
        phase: f64,
    },
    /// Strong de-excitation from a Rydberg mode through its intermediate
    /// state; the decay back to `g` emits one photon.
    Readout,
}

impl PulseKind {
    pub fn rotation(self) -> Option<Rotation> {
        match self {
            PulseKind::Pi => Some(Rotation::Pi),
            PulseKind::HalfPi => Some(Rotation::HalfPi),
            PulseKind::TwoPi => Some(Rotation::TwoPi),
            PulseKind::Raman { theta, phase } => Some(Rotation::Raman { theta, phase }),
            PulseKind::Readout => None,
        }
    }
}

/// One pulse on a level pair of one ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PulseOp {
    pub kind: PulseKind,
    pub node: usize,
    pub from: Level,
    pub to: Level,
    /// Collectively enhanced (pi_N) transition. Only affects timing.
    pub collective: bool,
    pub blockade_sensitive: bool,
}

fn blockade_rule(kind: PulseKind, from: Level, to: Level) -> bool {
    let ryd = |l: Level| l.mode().is_some_and(ModeLabel::is_rydberg);
    match kind {
        PulseKind::Readout => false,
        PulseKind::TwoPi => ryd(to) || ryd(from),
        _ => ryd(to),
    }
}

impl PulseOp {
    pub fn new(kind: PulseKind, node: usize, from: impl Into<Level>, to: impl Into<Level>) -> Self {
        let (from, to) = (from.into(), to.into());
        PulseOp { kind, node, from, to, collective: false, blockade_sensitive: blockade_rule(kind, from, to) }
    }

    pub fn pi(node: usize, from: impl Into<Level>, to: impl Into<Level>) -> Self {
        Self::new(PulseKind::Pi, node, from, to)
    }

    pub fn half_pi(node: usize, from: impl Into<Level>, to: impl Into<Level>) -> Self {
        Self::new(PulseKind::HalfPi, node, from, to)
    }

    pub fn two_pi(node: usize, from: impl Into<Level>, to: impl Into<Level>) -> Self {
        Self::new(PulseKind::TwoPi, node, from, to)
    }

    pub fn raman(node: usize, from: impl Into<Level>, to: impl Into<Level>, theta: f64, phase: f64) -> Self {
        Self::new(PulseKind::Raman { theta, phase }, node, from, to)
    }

    /// Readout of `rydberg` (R_u or R_d) through its intermediate state.
    pub fn readout(node: usize, rydberg: ModeLabel) -> Self {
        let to = rydberg.readout_channel().map_or(Level::Reservoir, |(e, _)| Level::Mode(e));
        Self::new(PulseKind::Readout, node, rydberg, to)
    }

    /// Marks the transition as collectively enhanced.
    pub fn collective(mut self) -> Self {
        self.collective = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.from == self.to {
            return Err(invalid!("pulse endpoints must differ ({})", self.from));
        }
        if self.kind == PulseKind::Readout {
            let from = self.from.mode().filter(|m| m.is_rydberg());
            let channel = from.and_then(ModeLabel::readout_channel);
            return match channel {
                Some((e, _)) if self.to == Level::Mode(e) => Ok(()),
                _ => Err(invalid!(
                    "readout must go from R_u to e_u or from R_d to e_d, got {} -> {}",
                    self.from,
                    self.to
                )),
            };
        }
        for end in [self.from, self.to] {
            if end.mode().is_some_and(ModeLabel::is_intermediate) {
                return Err(invalid!("intermediate state {end} is never populated by a rotation"));
            }
        }
        if self.blockade_sensitive != blockade_rule(self.kind, self.from, self.to) {
            return Err(invalid!("blockade flag inconsistent with {} -> {}", self.from, self.to));
        }
        Ok(())
    }
}

/// An element of a protocol: a pulse, or the quarter-wave plate that turns
/// a node's circularly polarized photons into H/V.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Step {
    Pulse(PulseOp),
    Waveplate { node: usize },
}

impl From<PulseOp> for Step {
    fn from(op: PulseOp) -> Self {
        Step::Pulse(op)
    }
}

fn swap_roles(m: Matrix2) -> Matrix2 {
    [[m[1][1], m[1][0]], [m[0][1], m[0][0]]]
}

/// Applies one pulse.
///
/// Blockade-sensitive pulses leave every ket that already holds a Rydberg
/// excitation at the pulsed node (other than on the pulsed pair) untouched.
pub fn apply_pulse(state: &StateVector, op: &PulseOp, convention: Convention) -> Result<StateVector> {
    op.validate()?;
    if op.node >= state.num_nodes() {
        return Err(invalid!("node {} out of range for {} nodes", op.node, state.num_nodes()));
    }
    let Some(rotation) = op.kind.rotation() else {
        return readout(state, op);
    };
    let node = op.node;
    let ends = [op.from.mode(), op.to.mode()];
    // Excitations on the pulsed pair itself do not block; any other
    // Rydberg excitation in the ensemble shifts the transition off resonance.
    let blocked =
        |ket: &crate::ket::BasisKet| op.blockade_sensitive && ket.rydberg_modes(node).any(|m| !ends.contains(&Some(m)));
    let m = rotation.matrix(convention);
    match (op.from, op.to) {
        (a, Level::Mode(b)) => state.apply_rotation_where(node, a, b, m, |k| !blocked(k)),
        (Level::Mode(a), Level::Reservoir) => {
            state.apply_rotation_where(node, Level::Reservoir, a, swap_roles(m), |k| !blocked(k))
        }
        (Level::Reservoir, Level::Reservoir) => Err(invalid!("pulse endpoints must differ (g)")),
    }
}

fn readout(state: &StateVector, op: &PulseOp) -> Result<StateVector> {
    let ryd = op.from.mode().expect("validated readout source");
    let (_, polarization) = ryd.readout_channel().expect("validated readout source");
    if !state.terms().any(|(k, _)| k.is_occupied(op.node, ryd)) {
        return Err(protocol_err!("readout of {ryd} at node {}: mode is empty in every term", op.node));
    }
    Ok(state.map_linear(|ket| {
        let out = if ket.is_occupied(op.node, ryd) {
            let slot = ket.next_slot();
            ket.clone().without_mode(op.node, ryd).with_photon(PhotonRecord {
                source_node: op.node,
                polarization,
                slot,
            })
        } else {
            ket.clone()
        };
        [(out, num_complex::Complex64::new(1.0, 0.0))]
    }))
}

/// Passes every photon emitted by `node` through the quarter-wave plate.
pub fn apply_waveplate(state: &StateVector, node: usize) -> Result<StateVector> {
    if node >= state.num_nodes() {
        return Err(invalid!("node {node} out of range for {} nodes", state.num_nodes()));
    }
    Ok(state.map_linear(|ket| {
        let out = ket.clone().map_photons(|p| {
            if p.source_node == node {
                PhotonRecord { polarization: p.polarization.through_waveplate(), ..p }
            } else {
                p
            }
        });
        [(out, num_complex::Complex64::new(1.0, 0.0))]
    }))
}

pub fn apply_step(state: &StateVector, step: &Step, convention: Convention) -> Result<StateVector> {
    match step {
        Step::Pulse(op) => apply_pulse(state, op, convention),
        Step::Waveplate { node } => apply_waveplate(state, *node),
    }
}

/// True when no ket holds two Rydberg excitations in the same node.
pub fn respects_blockade(state: &StateVector) -> bool {
    state.terms().all(|(k, _)| (0..state.num_nodes()).all(|n| k.rydberg_modes(n).count() <= 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ket::BasisKet;
    use crate::mode::Polarization;
    use core::f64::consts::FRAC_1_SQRT_2;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn ket(modes: &[ModeLabel]) -> BasisKet {
        modes.iter().fold(BasisKet::vacuum(1), |k, m| k.with_mode(0, *m))
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn blockade_flag_follows_target_mode() {
        use ModeLabel::*;
        assert!(PulseOp::pi(0, Level::Reservoir, RD).blockade_sensitive);
        assert!(PulseOp::pi(0, D, RD).blockade_sensitive);
        assert!(!PulseOp::pi(0, RD, D).blockade_sensitive);
        assert!(!PulseOp::half_pi(0, RU, U).blockade_sensitive);
        assert!(PulseOp::two_pi(0, U, RU).blockade_sensitive);
        assert!(!PulseOp::half_pi(0, U, D).blockade_sensitive);
        assert!(!PulseOp::readout(0, RD).blockade_sensitive);
    }

    #[test]
    fn pi_to_rydberg_is_blocked_by_other_rydberg() {
        use ModeLabel::*;
        let h = c(FRAC_1_SQRT_2);
        let s = StateVector::from_terms(1, [(ket(&[RU, D]), h), (ket(&[U, D]), h)]).unwrap();
        let out = apply_pulse(&s, &PulseOp::pi(0, D, RD), Convention::Table).unwrap();
        assert!((out.amplitude(&ket(&[RU, D])) - h).norm() < 1e-15);
        assert!((out.amplitude(&ket(&[U, RD])) - h).norm() < 1e-15);
        assert!(respects_blockade(&out));
    }

    #[test]
    fn two_pi_blocked_component_is_unchanged() {
        use ModeLabel::*;
        let s = StateVector::from_terms(1, [(ket(&[RD, U]), c(1.0))]).unwrap();
        let out = apply_pulse(&s, &PulseOp::two_pi(0, U, RU), Convention::Table).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn readout_emits_sigma_minus_from_rd() {
        use ModeLabel::*;
        let h = c(FRAC_1_SQRT_2);
        let s = StateVector::from_terms(1, [(ket(&[U, RD]), h), (ket(&[D, RU]), h)]).unwrap();
        let out = apply_pulse(&s, &PulseOp::readout(0, RD), Convention::Table).unwrap();
        let emitted =
            ket(&[U]).with_photon(PhotonRecord { source_node: 0, polarization: Polarization::SigmaMinus, slot: 0 });
        assert!((out.amplitude(&emitted) - h).norm() < 1e-15);
        assert!((out.amplitude(&ket(&[D, RU])) - h).norm() < 1e-15);
    }

    #[test]
    fn readout_of_empty_mode_is_an_error() {
        let s = StateVector::vacuum(1).unwrap();
        assert!(apply_pulse(&s, &PulseOp::readout(0, ModeLabel::RU), Convention::Table).is_err());
    }

    #[test]
    fn malformed_ops_are_rejected() {
        use ModeLabel::*;
        let s = StateVector::vacuum(1).unwrap();
        let bad_readout = PulseOp { to: Level::Mode(EU), ..PulseOp::readout(0, RD) };
        assert!(apply_pulse(&s, &bad_readout, Convention::Table).is_err());
        assert!(apply_pulse(&s, &PulseOp::pi(0, U, EU), Convention::Table).is_err());
        assert!(apply_pulse(&s, &PulseOp::pi(0, U, U), Convention::Table).is_err());
        assert!(apply_pulse(&s, &PulseOp::pi(3, Level::Reservoir, RD), Convention::Table).is_err());
        let mut lying = PulseOp::pi(0, D, RD);
        lying.blockade_sensitive = false;
        assert!(apply_pulse(&s, &lying, Convention::Table).is_err());
    }

    #[test]
    fn pulse_back_to_reservoir() {
        use ModeLabel::*;
        let s = StateVector::from_terms(1, [(ket(&[RD]), c(1.0))]).unwrap();
        let out = apply_pulse(&s, &PulseOp::pi(0, RD, Level::Reservoir), Convention::Table).unwrap();
        assert!((out.amplitude(&BasisKet::vacuum(1)) - c(1.0)).norm() < 1e-15);
    }

    fn arb_op() -> impl Strategy<Value = PulseOp> {
        let levels = prop_oneof![
            Just(Level::Reservoir),
            Just(Level::Mode(ModeLabel::U)),
            Just(Level::Mode(ModeLabel::D)),
            Just(Level::Mode(ModeLabel::UT)),
            Just(Level::Mode(ModeLabel::DT)),
            Just(Level::Mode(ModeLabel::RU)),
            Just(Level::Mode(ModeLabel::RD)),
        ];
        (0usize..4, levels.clone(), levels, 0.0..6.3f64).prop_map(|(k, a, b, theta)| {
            let kind = match k {
                0 => PulseKind::Pi,
                1 => PulseKind::HalfPi,
                2 => PulseKind::TwoPi,
                _ => PulseKind::Raman { theta, phase: 0.0 },
            };
            PulseOp::new(kind, 0, a, b)
        })
    }

    proptest! {
        #[test]
        fn blockade_sensitive_pulses_never_double_excite(ops in proptest::collection::vec(arb_op(), 1..30)) {
            let mut s = StateVector::vacuum(1).unwrap();
            for op in ops {
                if op.from == op.to { continue; }
                let held = respects_blockade(&s);
                s = apply_pulse(&s, &op, Convention::Table).unwrap();
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
                if held && op.blockade_sensitive {
                    prop_assert!(respects_blockade(&s));
                }
            }
        }
    }
}
