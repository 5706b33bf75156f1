//! Protocol scripts: single-node entanglement preparation, remote
//! entanglement, swapping chains and teleportation with corrections.
//!
//! Table-convention scripts carry the expected state after each row so a run
//! can be checked amplitude by amplitude.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, protocol_err, Result};
use crate::float;
use crate::ket::{BasisKet, PhotonRecord};
use crate::mode::{Level, ModeLabel, Polarization, Rail};
use crate::optics::{self, AnalyzerBranch, AnalyzerConfig, BellOutcome, Detector, Herald};
use crate::pulse::{apply_step, PulseOp, Step};
use crate::state::{Convention, StateVector};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default tolerance for row-by-row comparison.
pub const ROW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptStep {
    pub label: String,
    pub step: Step,
}

/// State a script should reach after `after_steps` steps.
#[derive(Debug, Clone)]
pub struct ExpectedRow {
    pub label: String,
    pub after_steps: usize,
    pub state: StateVector,
    /// Factor the engine state is multiplied by before comparison; `-1`
    /// where the listed row has an overall pi phase removed.
    pub global_phase: Complex64,
}

#[derive(Debug, Clone)]
pub struct ProtocolScript {
    pub name: String,
    pub steps: Vec<ScriptStep>,
    pub expected: Vec<ExpectedRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowCheck {
    pub label: String,
    pub after_steps: usize,
    /// Largest amplitude difference over all kets.
    pub deviation: f64,
}

impl RowCheck {
    pub fn matches(&self, tol: f64) -> bool {
        self.deviation <= tol
    }
}

#[derive(Debug, Clone)]
pub struct ScriptRun {
    /// `states[k]` is the state after `k` steps; `states[0]` is the input.
    pub states: Vec<StateVector>,
    pub checks: Vec<RowCheck>,
}

impl ScriptRun {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("a run always holds its input")
    }

    pub fn all_rows_match(&self, tol: f64) -> bool {
        self.checks.iter().all(|c| c.matches(tol))
    }
}

/// Largest `|a_k - b_k|` over the union of both supports.
pub fn max_deviation(a: &StateVector, b: &StateVector) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, x) in a.terms() {
        worst = worst.max((x - b.amplitude(k)).norm());
    }
    for (k, y) in b.terms() {
        worst = worst.max((a.amplitude(k) - y).norm());
    }
    worst
}

/// Multiplies `state` by the phase that makes its overlap with `reference`
/// real and positive.
pub fn align_global_phase(state: StateVector, reference: &StateVector) -> Result<StateVector> {
    let overlap = state.inner_product(reference)?;
    if overlap.norm() == 0.0 {
        return Ok(state);
    }
    Ok(state.scaled(overlap / overlap.norm()))
}

impl ProtocolScript {
    pub fn step_ops(&self) -> impl Iterator<Item = &Step> {
        self.steps.iter().map(|s| &s.step)
    }

    /// Runs every step and compares against the expected rows.
    pub fn run(&self, initial: &StateVector, convention: Convention) -> Result<ScriptRun> {
        let mut states = Vec::with_capacity(self.steps.len() + 1);
        states.push(initial.clone());
        for s in &self.steps {
            let next = apply_step(states.last().expect("non-empty"), &s.step, convention)?;
            states.push(next);
        }
        let mut checks = Vec::with_capacity(self.expected.len());
        for row in &self.expected {
            let got = states.get(row.after_steps).ok_or_else(|| {
                invalid!("row {} refers to step {} of {}", row.label, row.after_steps, self.steps.len())
            })?;
            checks.push(RowCheck {
                label: row.label.clone(),
                after_steps: row.after_steps,
                deviation: max_deviation(&got.clone().scaled(row.global_phase), &row.state),
            });
        }
        Ok(ScriptRun { states, checks })
    }

    /// Entanglement preparation of a flying qubit at `node`, ending with the
    /// quarter-wave plate. Expected rows are attached only for a one-node
    /// state.
    pub fn table1_on(node: usize, num_nodes: usize) -> ProtocolScript {
        use ModeLabel::*;
        let g = Level::Reservoir;
        let steps = alloc::vec![
            step("ii", PulseOp::pi(node, g, RD).collective()),
            step("iii", PulseOp::pi(node, RD, D)),
            step("iv", PulseOp::pi(node, g, RU).collective()),
            step("v", PulseOp::half_pi(node, RU, U)),
            step("vi", PulseOp::pi(node, D, RD)),
            step("vii", PulseOp::readout(node, RD)),
            step("viii", PulseOp::readout(node, RU)),
            ScriptStep { label: "ix".to_string(), step: Step::Waveplate { node } },
        ];
        let expected = if num_nodes == 1 && node == 0 { table1_rows() } else { Vec::new() };
        ProtocolScript { name: "table1".to_string(), steps, expected }
    }

    pub fn table1() -> ProtocolScript {
        Self::table1_on(0, 1)
    }

    /// Teleportation gate sequence (rows ii to vi) on a two-node state: the
    /// target and A qubits at node 0, the B qubit at node 1.
    ///
    /// Under the table convention the pi pulse that returns `R_d` to `u_t`
    /// closes a full cycle and carries the accumulated sign, written as a
    /// Raman rotation with drive phase pi. The Rabi propagator produces that
    /// sign by itself.
    pub fn table2(target: &TargetQubit, convention: Convention) -> ProtocolScript {
        use ModeLabel::*;
        let close = match convention {
            Convention::Table => PulseOp::raman(0, RD, UT, PI, PI),
            Convention::Rabi => PulseOp::pi(0, RD, UT),
        };
        let steps = alloc::vec![
            step("ii", PulseOp::pi(0, UT, RD)),
            step("iii", PulseOp::half_pi(0, U, D)),
            step("iv", PulseOp::two_pi(0, U, RU)),
            step("v", PulseOp::half_pi(0, U, D)),
            step("vi", close),
        ];
        let expected = match convention {
            Convention::Table => table2_rows(target),
            Convention::Rabi => Vec::new(),
        };
        ProtocolScript { name: "table2".to_string(), steps, expected }
    }
}

fn step(label: &str, op: PulseOp) -> ScriptStep {
    ScriptStep { label: label.to_string(), step: Step::Pulse(op) }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn node_ket(modes: &[ModeLabel]) -> BasisKet {
    modes.iter().fold(BasisKet::vacuum(1), |k, m| k.with_mode(0, *m))
}

fn photon(node: usize, polarization: Polarization) -> PhotonRecord {
    PhotonRecord { source_node: node, polarization, slot: 0 }
}

fn row(label: &str, after_steps: usize, num_nodes: usize, terms: Vec<(BasisKet, Complex64)>) -> ExpectedRow {
    ExpectedRow {
        label: label.to_string(),
        after_steps,
        state: StateVector::from_terms(num_nodes, terms).expect("well-formed row"),
        global_phase: ONE,
    }
}

fn table1_rows() -> Vec<ExpectedRow> {
    use ModeLabel::*;
    let h = c(FRAC_1_SQRT_2);
    let sm = photon(0, Polarization::SigmaMinus);
    let sp = photon(0, Polarization::SigmaPlus);
    alloc::vec![
        row("i", 0, 1, alloc::vec![(node_ket(&[]), ONE)]),
        row("ii", 1, 1, alloc::vec![(node_ket(&[RD]), ONE)]),
        row("iii", 2, 1, alloc::vec![(node_ket(&[D]), ONE)]),
        row("iv", 3, 1, alloc::vec![(node_ket(&[D, RU]), ONE)]),
        row("v", 4, 1, alloc::vec![(node_ket(&[D, U]), h), (node_ket(&[D, RU]), h)]),
        row("vi", 5, 1, alloc::vec![(node_ket(&[RD, U]), h), (node_ket(&[D, RU]), h)]),
        row("vii", 6, 1, alloc::vec![(node_ket(&[U]).with_photon(sm), h), (node_ket(&[D, RU]), h)]),
        row("viii", 7, 1, alloc::vec![(node_ket(&[U]).with_photon(sm), h), (node_ket(&[D]).with_photon(sp), h)]),
        row(
            "ix",
            8,
            1,
            alloc::vec![
                (node_ket(&[U]).with_photon(photon(0, Polarization::H)), h),
                (node_ket(&[D]).with_photon(photon(0, Polarization::V)), h),
            ]
        ),
    ]
}

/// Ket of the teleportation register: target-side mode and A mode at node 0,
/// B mode at node 1.
fn tab(t: ModeLabel, a: ModeLabel, b: ModeLabel) -> BasisKet {
    BasisKet::vacuum(2).with_mode(0, t).with_mode(0, a).with_mode(1, b)
}

fn table2_rows(target: &TargetQubit) -> Vec<ExpectedRow> {
    use ModeLabel::{D, RD, U, UT};
    let dt = ModeLabel::DT;
    let (al, be) = (target.alpha, target.beta);
    // The printed rows omit the overall 1/sqrt2.
    let n = c(FRAC_1_SQRT_2);
    let h = c(FRAC_1_SQRT_2);
    let scale = |terms: Vec<(BasisKet, Complex64)>| terms.into_iter().map(|(k, a)| (k, a * n)).collect::<Vec<_>>();
    // |x (u +/- d) y>, expanded.
    let spread = |t: ModeLabel, sign: f64, b: ModeLabel, coef: Complex64| {
        alloc::vec![(tab(t, U, b), coef), (tab(t, D, b), coef * sign)]
    };
    let mut rows = Vec::new();
    rows.push(row(
        "i",
        0,
        2,
        scale(alloc::vec![(tab(UT, U, U), al), (tab(UT, D, D), al), (tab(dt, U, U), be), (tab(dt, D, D), be),]),
    ));
    rows.push(row(
        "ii",
        1,
        2,
        scale(alloc::vec![(tab(RD, U, U), al), (tab(RD, D, D), al), (tab(dt, U, U), be), (tab(dt, D, D), be),]),
    ));
    let mut iii = Vec::new();
    iii.extend(spread(RD, 1.0, U, al * h));
    iii.extend(spread(RD, -1.0, D, al * h));
    iii.extend(spread(dt, 1.0, U, be * h));
    iii.extend(spread(dt, -1.0, D, be * h));
    rows.push(row("iii", 2, 2, scale(iii)));
    let mut iv = Vec::new();
    iv.extend(spread(RD, 1.0, U, al * h));
    iv.extend(spread(RD, -1.0, D, al * h));
    iv.extend(spread(dt, -1.0, U, -be * h));
    iv.extend(spread(dt, 1.0, D, -be * h));
    rows.push(row("iv", 3, 2, scale(iv)));
    rows.push(row(
        "v",
        4,
        2,
        scale(alloc::vec![(tab(RD, U, U), al), (tab(RD, D, D), al), (tab(dt, D, U), -be), (tab(dt, U, D), -be),]),
    ));
    let mut vi = row(
        "vi",
        5,
        2,
        scale(alloc::vec![(tab(UT, U, U), al), (tab(UT, D, D), al), (tab(dt, D, U), be), (tab(dt, U, D), be),]),
    );
    vi.global_phase = -ONE;
    rows.push(vi);
    rows
}

/// Runs the entanglement-preparation script on a fresh one-node state.
pub fn run_table1(convention: Convention) -> Result<ScriptRun> {
    ProtocolScript::table1().run(&StateVector::vacuum(1)?, convention)
}

/// Applies the entanglement-preparation steps to `node` of `state`; the
/// node must start with every mode empty.
pub fn run_table1_on(state: &StateVector, node: usize, convention: Convention) -> Result<StateVector> {
    if node >= state.num_nodes() {
        return Err(invalid!("node {node} out of range for {} nodes", state.num_nodes()));
    }
    if state.terms().any(|(k, _)| k.occupation_mask(node) != 0) {
        return Err(protocol_err!("node {node} is not in the reservoir state"));
    }
    let script = ProtocolScript::table1_on(node, state.num_nodes());
    Ok(script.run(state, convention)?.final_state().clone())
}

/// Maps the `(u, d)` memory at `node` onto a photon: `u` through `R_d` to H,
/// `d` through `R_u` to V.
pub fn memory_to_photon_steps(node: usize) -> Vec<Step> {
    use ModeLabel::*;
    alloc::vec![
        PulseOp::pi(node, U, RD).into(),
        PulseOp::pi(node, D, RU).into(),
        PulseOp::readout(node, RD).into(),
        PulseOp::readout(node, RU).into(),
        Step::Waveplate { node },
    ]
}

pub fn apply_steps(state: &StateVector, steps: &[Step], convention: Convention) -> Result<StateVector> {
    steps.iter().try_fold(state.clone(), |s, st| apply_step(&s, st, convention))
}

/// Amplitudes of a qubit to teleport.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetQubit {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl TargetQubit {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return Err(invalid!("|alpha|^2 + |beta|^2 = {n}, expected 1"));
        }
        Ok(TargetQubit { alpha, beta })
    }

    /// Haar-random qubit.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 4] = core::array::from_fn(|_| gaussian(rng));
            let n = float::sqrt(v.iter().map(|x| x * x).sum());
            if n > 1e-9 {
                return TargetQubit {
                    alpha: Complex64::new(v[0] / n, v[1] / n),
                    beta: Complex64::new(v[2] / n, v[3] / n),
                };
            }
        }
    }

    /// `alpha |u> + beta |d>` on a one-node state.
    pub fn memory_state(&self) -> StateVector {
        StateVector::from_terms(1, [(node_ket(&[ModeLabel::U]), self.alpha), (node_ket(&[ModeLabel::D]), self.beta)])
            .expect("one-node state")
    }

    /// Raman rotation angle and drive phase taking `u_t` to this qubit, up to
    /// a global phase.
    pub fn raman_angles(&self, convention: Convention) -> (f64, f64) {
        let theta = 2.0 * float::atan2(self.beta.norm(), self.alpha.norm());
        let mut phase = self.beta.arg() - self.alpha.arg();
        if convention == Convention::Rabi {
            phase += FRAC_PI_2;
        }
        (theta, phase)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; u1 in (0, 1].
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    float::sqrt(-2.0 * float::ln(u1)) * float::cos(2.0 * PI * u2)
}

/// `(|u u> + |d d>)/sqrt2` on nodes 0 and 1, no photons.
pub fn bell_pair() -> StateVector {
    let k = |m: ModeLabel| BasisKet::vacuum(2).with_mode(0, m).with_mode(1, m);
    StateVector::from_terms(2, [(k(ModeLabel::U), c(FRAC_1_SQRT_2)), (k(ModeLabel::D), c(FRAC_1_SQRT_2))])
        .expect("two-node state")
}

/// `(|u_a u_b> + |d_a d_b>)/sqrt2` with every other node empty.
pub fn bell_pair_between(num_nodes: usize, a: usize, b: usize) -> Result<StateVector> {
    if a == b || a >= num_nodes || b >= num_nodes {
        return Err(invalid!("bad node pair ({a}, {b}) for {num_nodes} nodes"));
    }
    let k = |m: ModeLabel| BasisKet::vacuum(num_nodes).with_mode(a, m).with_mode(b, m);
    StateVector::from_terms(num_nodes, [(k(ModeLabel::U), c(FRAC_1_SQRT_2)), (k(ModeLabel::D), c(FRAC_1_SQRT_2))])
}

/// Pauli corrections realized as resonant Raman pi rotations on `(u, d)`.
fn x_flip(node: usize, convention: Convention) -> PulseOp {
    let phase = match convention {
        Convention::Table => FRAC_PI_2,
        Convention::Rabi => 0.0,
    };
    PulseOp::raman(node, ModeLabel::U, ModeLabel::D, PI, phase)
}

/// Two pi rotations whose drive phases differ by pi/2 compose to a phase
/// flip in either convention.
fn z_flip(node: usize) -> [PulseOp; 2] {
    [
        PulseOp::raman(node, ModeLabel::U, ModeLabel::D, PI, 0.0),
        PulseOp::raman(node, ModeLabel::U, ModeLabel::D, PI, FRAC_PI_2),
    ]
}

/// Outcome of measuring the target and A qubits: `(target rail, A rail)`.
pub type TeleportOutcome = (Rail, Rail);

pub const ALL_OUTCOMES: [TeleportOutcome; 4] =
    [(Rail::Up, Rail::Up), (Rail::Down, Rail::Up), (Rail::Up, Rail::Down), (Rail::Down, Rail::Down)];

/// Pulses B applies after learning `outcome`. Under the table convention:
/// `(u,u)` nothing, `(d,u)` phase flip, `(u,d)` bit flip, `(d,d)` bit flip
/// then phase flip. The Rabi propagators permute these branches.
pub fn correction_for_outcome(outcome: TeleportOutcome, convention: Convention) -> Vec<PulseOp> {
    correction_at(1, outcome, convention)
}

fn correction_at(node: usize, outcome: TeleportOutcome, convention: Convention) -> Vec<PulseOp> {
    #[derive(Clone, Copy)]
    enum Fix {
        None,
        X,
        Z,
        XThenZ,
    }
    use Rail::{Down, Up};
    let fix = match (convention, outcome) {
        (Convention::Table, (Up, Up)) | (Convention::Rabi, (Down, Down)) => Fix::None,
        (Convention::Table, (Down, Up)) | (Convention::Rabi, (Up, Down)) => Fix::Z,
        (Convention::Table, (Up, Down)) | (Convention::Rabi, (Up, Up)) => Fix::X,
        (Convention::Table, (Down, Down)) | (Convention::Rabi, (Down, Up)) => Fix::XThenZ,
    };
    let mut ops = Vec::new();
    if matches!(fix, Fix::X | Fix::XThenZ) {
        ops.push(x_flip(node, convention));
    }
    if matches!(fix, Fix::Z | Fix::XThenZ) {
        ops.extend(z_flip(node));
    }
    ops
}

/// How the two teleportation measurements are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementMode {
    Forced(TeleportOutcome),
    /// Born-rule sampling from a ChaCha stream with this seed.
    Seeded(u64),
}

#[derive(Debug, Clone)]
pub struct TeleportResult {
    /// B's memory after correction, as a one-node state.
    pub state_b: StateVector,
    pub outcome: TeleportOutcome,
    /// Probability of the observed outcome.
    pub probability: f64,
    pub correction: Vec<PulseOp>,
    /// Fidelity of `state_b` with `alpha |u> + beta |d>`.
    pub fidelity: f64,
    /// Row checks of the gate sequence (table convention only).
    pub checks: Vec<RowCheck>,
}

/// Prepares `alpha |u_t> + beta |d_t>` at node 0 of `entangled`.
pub fn prepare_target(entangled: &StateVector, target: &TargetQubit, convention: Convention) -> Result<StateVector> {
    use ModeLabel::{RD, UT};
    let (theta, phase) = target.raman_angles(convention);
    let steps: [Step; 3] = [
        PulseOp::pi(0, Level::Reservoir, RD).collective().into(),
        PulseOp::pi(0, RD, UT).into(),
        PulseOp::raman(0, UT, ModeLabel::DT, theta, phase).into(),
    ];
    let prepared = apply_steps(entangled, &steps, convention)?;
    // The drive cannot set the global phase of alpha; fix it by bookkeeping.
    let ideal = target_register(target);
    align_global_phase(prepared, &ideal)
}

/// `(alpha |u_t> + beta |d_t>)(|u_A u_B> + |d_A d_B>)/sqrt2`.
fn target_register(target: &TargetQubit) -> StateVector {
    use ModeLabel::{D, U, UT};
    let n = c(FRAC_1_SQRT_2);
    StateVector::from_terms(
        2,
        [
            (tab(UT, U, U), target.alpha * n),
            (tab(UT, D, D), target.alpha * n),
            (tab(ModeLabel::DT, U, U), target.beta * n),
            (tab(ModeLabel::DT, D, D), target.beta * n),
        ],
    )
    .expect("two-node state")
}

/// Teleports `target` from node 0 to node 1 over the shared pair
/// `entangled`.
pub fn run_table2_teleport(
    entangled: &StateVector,
    target: &TargetQubit,
    convention: Convention,
    mode: MeasurementMode,
) -> Result<TeleportResult> {
    use ModeLabel::{D, DT, U, UT};
    check_bell_input(entangled)?;
    let prepared = prepare_target(entangled, target, convention)?;
    let script = ProtocolScript::table2(target, convention);
    let run = script.run(&prepared, convention)?;
    let rotated = apply_step(run.final_state(), &PulseOp::half_pi(0, UT, DT).into(), convention)?;

    let (mt, ma) = match mode {
        MeasurementMode::Forced((rt, ra)) => {
            let mt = rotated.project(0, (UT, DT), rt)?;
            let ma = mt.collapsed.project(0, (U, D), ra)?;
            (mt, ma)
        }
        MeasurementMode::Seeded(seed) => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mt = rotated.measure_modes(0, (UT, DT), &mut rng)?;
            let ma = mt.collapsed.measure_modes(0, (U, D), &mut rng)?;
            (mt, ma)
        }
    };
    let outcome = (mt.outcome, ma.outcome);
    let correction = correction_for_outcome(outcome, convention);
    let steps: Vec<Step> = correction.iter().copied().map(Step::Pulse).collect();
    let corrected = apply_steps(&ma.collapsed, &steps, convention)?;
    let state_b = corrected.factor_node(1)?;
    let fidelity = state_b.fidelity(&target.memory_state())?;
    Ok(TeleportResult {
        state_b,
        outcome,
        probability: mt.probability * ma.probability,
        correction,
        fidelity,
        checks: run.checks,
    })
}

fn check_bell_input(state: &StateVector) -> Result<()> {
    if state.num_nodes() != 2 {
        return Err(protocol_err!("teleportation needs a two-node pair, got {} nodes", state.num_nodes()));
    }
    if state.terms().any(|(k, _)| !k.photons().is_empty()) {
        return Err(protocol_err!("entangled input still carries photons"));
    }
    let f = state.fidelity(&bell_pair())?;
    if (f - 1.0).abs() > 1e-9 {
        return Err(protocol_err!("input is not (|uu> + |dd>)/sqrt2 (fidelity {f})"));
    }
    Ok(())
}

/// Heralded remote entanglement, or the pattern that lost it.
#[derive(Debug, Clone)]
pub enum RemoteGeneration {
    Heralded(HeraldedPair),
    Failed(BellOutcome),
}

#[derive(Debug, Clone)]
pub struct HeraldedPair {
    /// Memories after the conditional correction; photons consumed.
    pub state: StateVector,
    pub outcome: BellOutcome,
    /// Whether the phase-flip correction was applied.
    pub corrected: bool,
}

/// Both nodes of a fresh two-node register prepared as memory plus photon.
pub fn prepare_photon_pair() -> Result<StateVector> {
    let s = StateVector::vacuum(2)?;
    let s = run_table1_on(&s, 0, Convention::Table)?;
    run_table1_on(&s, 1, Convention::Table)
}

fn photon_nodes(state: &StateVector) -> Result<(usize, usize)> {
    let (ket, _) = state.terms().next().ok_or_else(|| invalid!("empty state"))?;
    let ph = ket.photons();
    if ph.len() != 2 {
        return Err(invalid!("expected two photons, found {}", ph.len()));
    }
    let (a, b) = (ph[0].source_node, ph[1].source_node);
    Ok((a.min(b), a.max(b)))
}

fn finish_branch(branch: AnalyzerBranch, fix_node: usize) -> Result<RemoteGeneration> {
    match branch.outcome.kind {
        Herald::Lost => Ok(RemoteGeneration::Failed(branch.outcome)),
        Herald::PhiPlus => Ok(RemoteGeneration::Heralded(HeraldedPair {
            state: branch.projected,
            outcome: branch.outcome,
            corrected: false,
        })),
        Herald::PhiMinus => {
            let steps: Vec<Step> = z_flip(fix_node).into_iter().map(Step::Pulse).collect();
            let state = apply_steps(&branch.projected, &steps, Convention::Table)?;
            Ok(RemoteGeneration::Heralded(HeraldedPair { state, outcome: branch.outcome, corrected: true }))
        }
    }
}

/// Bell measurement on the two photons of `joint` with the detector pattern
/// fixed. A `-` herald is corrected at the later node.
pub fn run_remote_generation_forced(joint: &StateVector, detectors: (Detector, Detector)) -> Result<RemoteGeneration> {
    let (_, fix_node) = photon_nodes(joint)?;
    let key = if detectors.0 <= detectors.1 { detectors } else { (detectors.1, detectors.0) };
    let branch = optics::analyze(joint, &AnalyzerConfig::default())?
        .into_iter()
        .find(|b| b.outcome.detectors == key)
        .ok_or_else(|| protocol_err!("detector pattern {:?} has zero probability", key))?;
    finish_branch(branch, fix_node)
}

/// Bell measurement with the pattern drawn from its Born probability.
pub fn run_remote_generation<R: Rng + ?Sized>(joint: &StateVector, rng: &mut R) -> Result<RemoteGeneration> {
    let (_, fix_node) = photon_nodes(joint)?;
    let branches = optics::analyze(joint, &AnalyzerConfig::default())?;
    let branch = sample_branch(branches, rng, |_| true)?;
    finish_branch(branch, fix_node)
}

/// Like [`run_remote_generation`] but conditioned on a useful herald, which
/// is what repeating the attempt until success produces.
pub fn herald_until_success<R: Rng + ?Sized>(joint: &StateVector, rng: &mut R) -> Result<HeraldedPair> {
    let (_, fix_node) = photon_nodes(joint)?;
    herald_conditioned(joint, fix_node, rng)
}

fn herald_conditioned<R: Rng + ?Sized>(joint: &StateVector, fix_node: usize, rng: &mut R) -> Result<HeraldedPair> {
    let branches = optics::analyze(joint, &AnalyzerConfig::default())?;
    let branch = sample_branch(branches, rng, |b| b.outcome.kind != Herald::Lost)?;
    match finish_branch(branch, fix_node)? {
        RemoteGeneration::Heralded(h) => Ok(h),
        RemoteGeneration::Failed(o) => Err(protocol_err!("sampled a lost pattern {:?}", o.detectors)),
    }
}

fn sample_branch<R: Rng + ?Sized>(
    branches: Vec<AnalyzerBranch>,
    rng: &mut R,
    keep: impl Fn(&AnalyzerBranch) -> bool,
) -> Result<AnalyzerBranch> {
    let kept: Vec<AnalyzerBranch> = branches.into_iter().filter(|b| keep(b)).collect();
    let total: f64 = kept.iter().map(|b| b.outcome.probability).sum();
    if kept.is_empty() || total <= 0.0 {
        return Err(protocol_err!("no detector pattern can occur"));
    }
    let mut x = rng.random::<f64>() * total;
    let last = kept.len() - 1;
    for (i, b) in kept.into_iter().enumerate() {
        x -= b.outcome.probability;
        if x < 0.0 || i == last {
            return Ok(b);
        }
    }
    unreachable!("loop returns on the last branch")
}

/// Entanglement distribution along `num_nodes` nodes: node 0 is entangled
/// with node 1, then each further node is linked by reading out the previous
/// end node and Bell-measuring its photon with a fresh one. Every Bell
/// measurement is conditioned on success.
pub fn run_swap_chain<R: Rng + ?Sized>(num_nodes: usize, rng: &mut R) -> Result<StateVector> {
    if num_nodes < 2 {
        return Err(invalid!("a chain needs at least 2 nodes, got {num_nodes}"));
    }
    let mut state = herald_until_success(&prepare_photon_pair()?, rng)?.state;
    for next in 2..num_nodes {
        state = state.tensor(&StateVector::vacuum(1)?);
        state = apply_steps(&state, &memory_to_photon_steps(next - 1), Convention::Table)?;
        state = run_table1_on(&state, next, Convention::Table)?;
        state = herald_until_success(&state, rng)?.state;
    }
    Ok(state)
}

/// Nested swap over four nodes: pairs (0,1) and (2,3) are heralded
/// independently, then the memories of 1 and 2 are read out and
/// Bell-measured, leaving 0 and 3 entangled.
pub fn run_nested_swap<R: Rng + ?Sized>(rng: &mut R) -> Result<StateVector> {
    let ab = herald_until_success(&prepare_photon_pair()?, rng)?.state;
    let cd = herald_until_success(&prepare_photon_pair()?, rng)?.state;
    let mut state = ab.tensor(&cd);
    state = apply_steps(&state, &memory_to_photon_steps(1), Convention::Table)?;
    state = apply_steps(&state, &memory_to_photon_steps(2), Convention::Table)?;
    // Both photons come from the inner nodes; the sign fix goes to node 3.
    Ok(herald_conditioned(&state, 3, rng)?.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table1_rows_all_match() {
        let run = run_table1(Convention::Table).unwrap();
        assert_eq!(run.checks.len(), 9);
        for chk in &run.checks {
            assert!(chk.matches(ROW_TOLERANCE), "row {} off by {}", chk.label, chk.deviation);
        }
        for s in &run.states {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn table2_rows_all_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let t = TargetQubit::random(&mut rng);
            let r =
                run_table2_teleport(&bell_pair(), &t, Convention::Table, MeasurementMode::Forced((Rail::Up, Rail::Up)))
                    .unwrap();
            assert_eq!(r.checks.len(), 6);
            for chk in &r.checks {
                assert!(chk.matches(ROW_TOLERANCE), "row {} off by {}", chk.label, chk.deviation);
            }
        }
    }

    #[test]
    fn teleport_all_outcomes_both_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let t = TargetQubit::random(&mut rng);
            for conv in [Convention::Table, Convention::Rabi] {
                for outcome in ALL_OUTCOMES {
                    let r = run_table2_teleport(&bell_pair(), &t, conv, MeasurementMode::Forced(outcome)).unwrap();
                    assert!((r.fidelity - 1.0).abs() < 1e-9, "{conv:?} {outcome:?}: {}", r.fidelity);
                    assert!((r.probability - 0.25).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn basis_state_teleports_to_itself() {
        let t = TargetQubit::new(ONE, Complex64::new(0.0, 0.0)).unwrap();
        for outcome in ALL_OUTCOMES {
            let r = run_table2_teleport(&bell_pair(), &t, Convention::Table, MeasurementMode::Forced(outcome)).unwrap();
            let up = node_ket(&[ModeLabel::U]);
            assert!((r.state_b.amplitude(&up).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn table_corrections_follow_outcome_table() {
        use Rail::{Down, Up};
        assert!(correction_for_outcome((Up, Up), Convention::Table).is_empty());
        assert_eq!(correction_for_outcome((Down, Up), Convention::Table).len(), 2);
        assert_eq!(correction_for_outcome((Up, Down), Convention::Table).len(), 1);
        assert_eq!(correction_for_outcome((Down, Down), Convention::Table).len(), 3);
        for op in correction_for_outcome((Down, Down), Convention::Rabi) {
            assert!(matches!(op.kind, crate::pulse::PulseKind::Raman { .. }));
        }
    }

    #[test]
    fn bit_flip_fixes_swapped_branch() {
        // alpha |d> + beta |u>  ->  alpha |u> + beta |d>
        let t = TargetQubit::new(c(0.6), Complex64::new(0.0, 0.8)).unwrap();
        let pre = StateVector::from_terms(
            2,
            [
                (BasisKet::vacuum(2).with_mode(1, ModeLabel::D), t.alpha),
                (BasisKet::vacuum(2).with_mode(1, ModeLabel::U), t.beta),
            ],
        )
        .unwrap();
        let steps: Vec<Step> =
            correction_for_outcome((Rail::Up, Rail::Down), Convention::Table).into_iter().map(Step::Pulse).collect();
        let out = apply_steps(&pre, &steps, Convention::Table).unwrap().factor_node(1).unwrap();
        assert!((out.fidelity(&t.memory_state()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_measurement_is_reproducible() {
        let t = TargetQubit::new(c(0.6), c(0.8)).unwrap();
        let a = run_table2_teleport(&bell_pair(), &t, Convention::Table, MeasurementMode::Seeded(5)).unwrap();
        let b = run_table2_teleport(&bell_pair(), &t, Convention::Table, MeasurementMode::Seeded(5)).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert!((a.fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_pair_is_rejected() {
        let t = TargetQubit::new(ONE, c(0.0)).unwrap();
        let product = StateVector::from_terms(
            2,
            [(BasisKet::vacuum(2).with_mode(0, ModeLabel::U).with_mode(1, ModeLabel::U), ONE)],
        )
        .unwrap();
        assert!(run_table2_teleport(&product, &t, Convention::Table, MeasurementMode::Seeded(0)).is_err());
    }

    #[test]
    fn target_rejects_unnormalized() {
        assert!(TargetQubit::new(ONE, ONE).is_err());
    }

    #[test]
    fn remote_generation_plus_and_minus_patterns() {
        let joint = prepare_photon_pair().unwrap();
        let ideal = bell_pair();
        for pattern in [
            (Detector::D1, Detector::D4),
            (Detector::D2, Detector::D3),
            (Detector::D1, Detector::D3),
            (Detector::D2, Detector::D4),
        ] {
            match run_remote_generation_forced(&joint, pattern).unwrap() {
                RemoteGeneration::Heralded(h) => {
                    assert!((h.state.fidelity(&ideal).unwrap() - 1.0).abs() < 1e-12, "{pattern:?}");
                    assert!((h.outcome.probability - 0.125).abs() < 1e-12);
                }
                RemoteGeneration::Failed(_) => panic!("{pattern:?} should herald"),
            }
        }
        match run_remote_generation_forced(&joint, (Detector::D1, Detector::D1)).unwrap() {
            RemoteGeneration::Failed(o) => assert_eq!(o.kind, Herald::Lost),
            RemoteGeneration::Heralded(_) => panic!("same-detector event is lost"),
        }
    }

    #[test]
    fn swap_chains_end_in_bell_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=5 {
            for _ in 0..4 {
                let s = run_swap_chain(n, &mut rng).unwrap();
                let ideal = bell_pair_between(n, 0, n - 1).unwrap();
                assert!((s.fidelity(&ideal).unwrap() - 1.0).abs() < 1e-12, "n = {n}");
            }
        }
    }

    #[test]
    fn nested_swap_links_outer_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..8 {
            let s = run_nested_swap(&mut rng).unwrap();
            let ideal = bell_pair_between(4, 0, 3).unwrap();
            assert!((s.fidelity(&ideal).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
