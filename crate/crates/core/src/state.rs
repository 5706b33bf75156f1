//! Sparse complex state vector over [`BasisKet`]s.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, protocol_err, Error, Result};
use crate::float;
use crate::ket::BasisKet;
use crate::mode::{Level, ModeLabel, Rail};

pub const DEFAULT_PRUNE_EPSILON: f64 = 1e-12;

/// Phase convention for two-level rotations.
///
/// `Table` uses the real, phase-free maps of the protocol tables:
/// pi swaps the two levels with amplitude +1, pi/2 sends `a -> (a+b)/sqrt2`
/// and `b -> (a-b)/sqrt2`, and 2pi multiplies the resonant pair by -1.
/// `Rabi` uses the resonant two-level propagator with `-i` off-diagonals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Convention {
    #[default]
    Table,
    Rabi,
}

/// Pulse area of a two-level rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Rotation {
    HalfPi,
    Pi,
    TwoPi,
    /// Arbitrary Raman rotation by `theta` with drive phase `phase`.
    Raman {
        theta: f64,
        phase: f64,
    },
}

/// 2x2 matrix in the (a, b) basis, `m[row][col]`; column 0 is the image of `a`.
pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Rotation {
    pub fn matrix(self, convention: Convention) -> Matrix2 {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match (convention, self) {
            (Convention::Table, Rotation::Pi) => [[ZERO, ONE], [ONE, ZERO]],
            (Convention::Table, Rotation::HalfPi) => [[h, h], [h, -h]],
            (_, Rotation::TwoPi) => [[-ONE, ZERO], [ZERO, -ONE]],
            (Convention::Table, Rotation::Raman { theta, phase }) => {
                let (c, s) = (float::cos(theta / 2.0), float::sin(theta / 2.0));
                let e = Complex64::from_polar(1.0, phase);
                [[Complex64::new(c, 0.0), -e.conj() * s], [e * s, Complex64::new(c, 0.0)]]
            }
            (Convention::Rabi, r) => {
                let (theta, phase) = match r {
                    Rotation::HalfPi => (core::f64::consts::FRAC_PI_2, 0.0),
                    Rotation::Pi => (core::f64::consts::PI, 0.0),
                    Rotation::Raman { theta, phase } => (theta, phase),
                    Rotation::TwoPi => unreachable!(),
                };
                let (c, s) = (float::cos(theta / 2.0), float::sin(theta / 2.0));
                let e = Complex64::from_polar(1.0, phase);
                let mi = Complex64::new(0.0, -1.0);
                [[Complex64::new(c, 0.0), mi * e.conj() * s], [mi * e * s, Complex64::new(c, 0.0)]]
            }
        }
    }
}

pub fn matmul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Result of a projective measurement of one dual-rail qubit.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub outcome: Rail,
    pub collapsed: StateVector,
    /// Born probability of `outcome` in the pre-measurement state.
    pub probability: f64,
}

/// Sparse superposition of basis kets.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_nodes: usize,
    terms: BTreeMap<BasisKet, Complex64>,
    prune_epsilon: f64,
}

impl StateVector {
    /// All atoms of every node pumped to the reservoir, no photons.
    pub fn vacuum(num_nodes: usize) -> Result<Self> {
        if num_nodes == 0 {
            return Err(invalid!("a state needs at least one node"));
        }
        let mut terms = BTreeMap::new();
        terms.insert(BasisKet::vacuum(num_nodes), ONE);
        Ok(StateVector { num_nodes, terms, prune_epsilon: DEFAULT_PRUNE_EPSILON })
    }

    /// Builds a state from `(ket, amplitude)` pairs, summing duplicates.
    /// The result is not renormalized.
    pub fn from_terms(num_nodes: usize, terms: impl IntoIterator<Item = (BasisKet, Complex64)>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(invalid!("a state needs at least one node"));
        }
        let mut map: BTreeMap<BasisKet, Complex64> = BTreeMap::new();
        for (ket, amp) in terms {
            if ket.num_nodes() != num_nodes {
                return Err(invalid!("ket has {} nodes, state has {num_nodes}", ket.num_nodes()));
            }
            *map.entry(ket).or_insert(ZERO) += amp;
        }
        let mut s = StateVector { num_nodes, terms: map, prune_epsilon: DEFAULT_PRUNE_EPSILON };
        s.prune();
        Ok(s)
    }

    pub fn with_prune_epsilon(mut self, eps: f64) -> Self {
        self.prune_epsilon = eps;
        self.prune();
        self
    }

    pub fn prune_epsilon(&self) -> f64 {
        self.prune_epsilon
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisKet, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, ket: &BasisKet) -> Complex64 {
        self.terms.get(ket).copied().unwrap_or(ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        float::sqrt(self.norm_sqr())
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(protocol_err!("cannot normalize the zero vector"));
        }
        for a in self.terms.values_mut() {
            *a /= n;
        }
        Ok(self)
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        for a in self.terms.values_mut() {
            *a *= factor;
        }
        self.prune();
        self
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_nodes != other.num_nodes {
            return Err(invalid!("node counts differ: {} vs {}", self.num_nodes, other.num_nodes));
        }
        let (small, large, flip) =
            if self.terms.len() <= other.terms.len() { (self, other, false) } else { (other, self, true) };
        let mut acc = ZERO;
        for (ket, a) in &small.terms {
            if let Some(b) = large.terms.get(ket) {
                acc += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        Ok(acc)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    /// Multiplies by a global phase so the first term (in ket order) has a
    /// real positive amplitude.
    pub fn canonical_phase(self) -> Self {
        match self.terms.values().next() {
            Some(a) if a.norm() > 0.0 => {
                let phase = a.conj() / a.norm();
                self.scaled(phase)
            }
            _ => self,
        }
    }

    /// Applies a ket-wise linear map.
    pub fn map_linear<I>(&self, mut f: impl FnMut(&BasisKet) -> I) -> StateVector
    where
        I: IntoIterator<Item = (BasisKet, Complex64)>,
    {
        let mut out: BTreeMap<BasisKet, Complex64> = BTreeMap::new();
        for (ket, amp) in &self.terms {
            for (k, c) in f(ket) {
                *out.entry(k).or_insert(ZERO) += c * amp;
            }
        }
        let mut s = StateVector { num_nodes: self.num_nodes, terms: out, prune_epsilon: self.prune_epsilon };
        s.prune();
        s
    }

    /// Two-level rotation between `a` and `b` at `node`, applied to every ket.
    pub fn apply_single_mode_rotation(
        &self,
        node: usize,
        a: Level,
        b: ModeLabel,
        rotation: Rotation,
        convention: Convention,
    ) -> Result<StateVector> {
        self.apply_rotation_where(node, a, b, rotation.matrix(convention), |_| true)
    }

    /// Like [`apply_single_mode_rotation`](Self::apply_single_mode_rotation)
    /// with an explicit matrix; kets for which `active` is false are left
    /// untouched.
    pub fn apply_rotation_where(
        &self,
        node: usize,
        a: Level,
        b: ModeLabel,
        m: Matrix2,
        mut active: impl FnMut(&BasisKet) -> bool,
    ) -> Result<StateVector> {
        self.check_node(node)?;
        if a == Level::Mode(b) {
            return Err(invalid!("rotation endpoints must differ (both {b})"));
        }
        Ok(self.map_linear(|ket| {
            let mut out: Vec<(BasisKet, Complex64)> = Vec::with_capacity(2);
            let split = if active(ket) { two_level_split(ket, node, a, b) } else { None };
            match split {
                None => out.push((ket.clone(), ONE)),
                Some((in_a, ket_a, ket_b)) => {
                    let col = if in_a { 0 } else { 1 };
                    out.push((ket_a, m[0][col]));
                    out.push((ket_b, m[1][col]));
                }
            }
            out
        }))
    }

    /// Born probabilities of the two rails of `(first, second)` at `node`.
    pub fn rail_probabilities(&self, node: usize, qubit: (ModeLabel, ModeLabel)) -> Result<[f64; 2]> {
        self.check_node(node)?;
        let mut p = [0.0; 2];
        for (ket, amp) in &self.terms {
            p[rail_of(ket, node, qubit)? as usize] += amp.norm_sqr();
        }
        Ok(p)
    }

    /// Projects onto one rail and renormalizes.
    pub fn project(&self, node: usize, qubit: (ModeLabel, ModeLabel), rail: Rail) -> Result<Measurement> {
        let p = self.rail_probabilities(node, qubit)?;
        let probability = p[rail as usize] / (p[0] + p[1]);
        if probability <= 0.0 {
            return Err(protocol_err!("outcome {:?} has zero probability", rail));
        }
        let terms = self
            .terms
            .iter()
            .filter(|(ket, _)| rail_of(ket, node, qubit).ok() == Some(rail))
            .map(|(k, a)| (k.clone(), *a));
        let collapsed = StateVector::from_terms(self.num_nodes, terms)?.normalized()?;
        Ok(Measurement { outcome: rail, collapsed, probability })
    }

    /// Samples a rail with its Born probability and collapses onto it.
    pub fn measure_modes<R: Rng + ?Sized>(
        &self,
        node: usize,
        qubit: (ModeLabel, ModeLabel),
        rng: &mut R,
    ) -> Result<Measurement> {
        let p = self.rail_probabilities(node, qubit)?;
        let x: f64 = rng.random::<f64>() * (p[0] + p[1]);
        let rail = if x < p[0] { Rail::Up } else { Rail::Down };
        self.project(node, qubit, rail)
    }

    /// Tensor product; the other state's nodes are appended after ours.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut terms = BTreeMap::new();
        for (ka, a) in &self.terms {
            for (kb, b) in &other.terms {
                terms.insert(ka.tensor(kb), a * b);
            }
        }
        let mut s =
            StateVector { num_nodes: self.num_nodes + other.num_nodes, terms, prune_epsilon: self.prune_epsilon };
        s.prune();
        s
    }

    /// Single-node state of `node`, valid when every term agrees on all other
    /// nodes and on the photons (the rest of the system is one basis ket).
    pub fn factor_node(&self, node: usize) -> Result<StateVector> {
        self.check_node(node)?;
        let mut rest: Option<BasisKet> = None;
        let mut local = Vec::with_capacity(self.terms.len());
        for (ket, amp) in &self.terms {
            let others = ket.clone().with_mask(node, 0);
            match &rest {
                None => rest = Some(others),
                Some(k) if *k != others => {
                    return Err(protocol_err!("node {node} is correlated with the rest of the state"));
                }
                Some(_) => {}
            }
            local.push((BasisKet::vacuum(1).with_mask(0, ket.occupation_mask(node)), *amp));
        }
        StateVector::from_terms(1, local)?.normalized()
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.num_nodes {
            Err(invalid!("node {node} out of range for {} nodes", self.num_nodes))
        } else {
            Ok(())
        }
    }

    fn prune(&mut self) {
        let eps = self.prune_epsilon;
        self.terms.retain(|_, a| a.norm() >= eps);
    }
}

/// Splits a ket into its position inside the `a`/`b` two-level subspace.
/// Returns `(is_in_a, ket_with_a, ket_with_b)`, or `None` when the ket is
/// outside the subspace (neither or both ends occupied).
fn two_level_split(ket: &BasisKet, node: usize, a: Level, b: ModeLabel) -> Option<(bool, BasisKet, BasisKet)> {
    let b_occ = ket.is_occupied(node, b);
    match a {
        Level::Reservoir => {
            let ket_a = ket.clone().without_mode(node, b);
            let ket_b = ket.clone().with_mode(node, b);
            Some((!b_occ, ket_a, ket_b))
        }
        Level::Mode(ma) => {
            let a_occ = ket.is_occupied(node, ma);
            if a_occ == b_occ {
                return None;
            }
            let base = ket.clone().without_mode(node, ma).without_mode(node, b);
            Some((a_occ, base.clone().with_mode(node, ma), base.with_mode(node, b)))
        }
    }
}

fn rail_of(ket: &BasisKet, node: usize, (first, second): (ModeLabel, ModeLabel)) -> Result<Rail> {
    match (ket.is_occupied(node, first), ket.is_occupied(node, second)) {
        (true, false) => Ok(Rail::Up),
        (false, true) => Ok(Rail::Down),
        _ => Err(protocol_err!("ket `{ket}` does not occupy exactly one of {first}/{second} at node {node}")),
    }
}

fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

impl fmt::Display for StateVector {
    /// One line per term, sorted by ket:
    /// `re im | node0:{..} node1:{..} | photons:[..]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ket, amp) in &self.terms {
            writeln!(f, "{:.12} {:.12} | {}", clean(amp.re), clean(amp.im), ket)?;
        }
        Ok(())
    }
}

impl FromStr for StateVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut num_nodes = None;
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (amp, ket) =
                line.split_once('|').ok_or_else(|| Error::Parse(alloc::format!("missing `|` in `{line}`")))?;
            let mut it = amp.split_whitespace();
            let mut num = || -> Result<f64> {
                it.next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Parse(alloc::format!("bad amplitude in `{line}`")))
            };
            let (re, im) = (num()?, num()?);
            let ket: BasisKet = ket.parse()?;
            num_nodes.get_or_insert(ket.num_nodes());
            terms.push((ket, Complex64::new(re, im)));
        }
        let n = num_nodes.ok_or_else(|| Error::Parse("empty state".into()))?;
        StateVector::from_terms(n, terms)
    }
}
