//! The acceptance table: every headline figure recomputed and checked at
//! its tolerance.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rydrep_core::emission::{self, sample_cloud, WaveVectorSet, DEFAULT_BLOCKADE_RADIUS};
use rydrep_core::mc::{self, Scheme, TrialConfig};
use rydrep_core::optics::{self, AnalyzerConfig, Herald};
use rydrep_core::protocol::{self, MeasurementMode, TargetQubit, ALL_OUTCOMES, ROW_TOLERANCE};
use rydrep_core::rates::{self, EfficiencyParams, Method, Preset};
use rydrep_core::state::Convention;
use rydrep_core::{BasisKet, Complex64, ModeLabel, StateVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::parallel;

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    /// Soft criteria are reported but never fail a run.
    pub hard: bool,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.pass, self.hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "NOTE",
        };
        write!(f, "[{verdict}] {:>2} {}: {}", self.id, self.title, self.detail)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub mc_trials: u64,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { mc_trials: 100_000, seed: 20_150_601 }
    }
}

fn within(value: f64, target: f64, rel_tol: f64) -> bool {
    ((value - target) / target).abs() <= rel_tol
}

fn criterion(id: u32, title: &'static str, hard: bool, pass: bool, detail: String) -> Criterion {
    Criterion { id, title, hard, pass, detail }
}

pub fn headline_rates() -> Criterion {
    let c = Preset::Conservative.params();
    let o = Preset::Optimistic.params();
    let cg = rates::two_node_generation(&c).rate;
    let ct = rates::two_node_teleportation(&c).rate;
    let og = rates::two_node_generation(&o).rate;
    let ot = rates::two_node_teleportation(&o).rate;
    let pass = within(cg, 24.9, 0.02) && within(ct, 4.78, 0.02) && within(og, 7810.0, 0.03) && within(ot, 3540.0, 0.03);
    criterion(
        1,
        "two-node rates",
        true,
        pass,
        format!(
            "conservative gen {cg:.3} Hz (24.9 +-2%), tel {ct:.3} Hz (4.78 +-2%); optimistic gen {:.3} kHz (7.81 +-3%), tel {:.3} kHz (3.54 +-3%)",
            og / 1e3,
            ot / 1e3
        ),
    )
}

pub fn limits() -> Criterion {
    let c = Preset::Conservative.params();
    let max = rates::max_rep_rate(&c);
    let far = EfficiencyParams { d: 10e3, c_fiber: 2e8, ..c };
    let light = rates::light_limited_rate(&far);
    let with_protocol = rates::max_rep_rate(&far);
    // "140 kHz" at two significant figures covers [135, 145) kHz.
    let pass = (135e3..145e3).contains(&max) && within(max, 142.9e3, 5e-4) && within(light, 10e3, 1e-12);
    criterion(
        2,
        "repetition limits",
        true,
        pass,
        format!(
            "max rep rate {:.2} kHz (140 at 2 s.f.); light limit at 10 km {:.3} kHz (10); with protocol time {:.2} kHz",
            max / 1e3,
            light / 1e3,
            with_protocol / 1e3
        ),
    )
}

pub fn zhao() -> Criterion {
    let c = rates::zhao_comparison(&Preset::Conservative.params());
    let o = rates::zhao_comparison(&Preset::Optimistic.params());
    let pass = within(c, 19.4, 0.02) && within(o, 5.26, 0.02);
    criterion(
        3,
        "n_G = 7 vs 12 rate ratio",
        true,
        pass,
        format!("conservative {c:.3} (19.4 +-2%), optimistic {o:.3} (5.26 +-2%)"),
    )
}

pub fn protocol_algebra(seed: u64) -> Criterion {
    let mut failures = Vec::new();
    match protocol::run_table1(Convention::Table) {
        Ok(run) => {
            for chk in run.checks.iter().filter(|c| !c.matches(ROW_TOLERANCE)) {
                failures.push(format!("table 1 row {} off by {:e}", chk.label, chk.deviation));
            }
        }
        Err(e) => failures.push(format!("table 1: {e}")),
    }
    let bell = protocol::bell_pair();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for i in 0..100 {
        let target = TargetQubit::random(&mut rng);
        for conv in [Convention::Table, Convention::Rabi] {
            for outcome in ALL_OUTCOMES {
                match protocol::run_table2_teleport(&bell, &target, conv, MeasurementMode::Forced(outcome)) {
                    Ok(r) => {
                        runs += 1;
                        worst = worst.max((r.fidelity - 1.0).abs());
                        if i == 0 && conv == Convention::Table {
                            for chk in r.checks.iter().filter(|c| !c.matches(ROW_TOLERANCE)) {
                                failures.push(format!("table 2 row {} off by {:e}", chk.label, chk.deviation));
                            }
                        }
                    }
                    Err(e) => failures.push(format!("teleport {outcome:?} {conv:?}: {e}")),
                }
            }
        }
    }
    let pass = failures.is_empty() && worst <= 1e-9;
    let mut detail = format!("all table rows exact; {runs} teleports, worst |F - 1| = {worst:.1e} (<= 1e-9)");
    if !failures.is_empty() {
        detail = failures.join("; ");
    }
    criterion(4, "protocol algebra", true, pass, detail)
}

/// `(|uu> + s|dd>)/sqrt2` on two nodes.
fn bell(sign: f64) -> StateVector {
    let k = |m: ModeLabel| BasisKet::vacuum(2).with_mode(0, m).with_mode(1, m);
    let a = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_terms(
        2,
        [(k(ModeLabel::U), Complex64::new(a, 0.0)), (k(ModeLabel::D), Complex64::new(sign * a, 0.0))],
    )
    .expect("two-node state")
}

pub fn bell_analyzer() -> Criterion {
    let run = || -> rydrep_core::Result<(f64, f64, f64)> {
        let joint = protocol::prepare_photon_pair()?;
        let branches = optics::analyze(&joint, &AnalyzerConfig::default())?;
        let (plus, minus) = (bell(1.0), bell(-1.0));
        let mut useful = 0.0;
        let mut worst_p: f64 = 0.0;
        let mut worst_f: f64 = 0.0;
        let mut count = 0;
        for b in &branches {
            let ideal = match b.outcome.kind {
                Herald::PhiPlus => &plus,
                Herald::PhiMinus => &minus,
                Herald::Lost => continue,
            };
            count += 1;
            useful += b.outcome.probability;
            worst_p = worst_p.max((b.outcome.probability - 0.125).abs());
            worst_f = worst_f.max((b.projected.fidelity(ideal)? - 1.0).abs());
        }
        if count != 4 {
            worst_p = f64::INFINITY;
        }
        Ok((useful, worst_p, worst_f))
    };
    match run() {
        Ok((useful, dp, df)) => {
            let pass = (useful - 0.5).abs() < 1e-12 && dp < 1e-12 && df < 1e-12;
            criterion(
                5,
                "Bell analyzer",
                true,
                pass,
                format!("useful probability {useful:.15}; worst pattern |p - 1/8| {dp:.1e}; worst |F - 1| {df:.1e}"),
            )
        }
        Err(e) => criterion(5, "Bell analyzer", true, false, e.to_string()),
    }
}

pub fn phase_matching(seed: u64) -> Criterion {
    let n = 2000;
    let cloud = match sample_cloud(n, DEFAULT_BLOCKADE_RADIUS, seed) {
        Ok(c) => c,
        Err(e) => return criterion(6, "phase-matched enhancement", false, false, e.to_string()),
    };
    let k = WaveVectorSet::collinear();
    let matched = emission::emission_amplitude(&cloud, &k.phase_matched());
    let samples = parallel::direction_samples(&cloud, &k, 1000, seed);
    let ratio = emission::enhancement_from_samples(&cloud, &k, &samples).unwrap_or(f64::NAN);
    let nf = n as f64;
    let pass = matched == nf && ratio >= 0.5 * nf && ratio <= 2.0 * nf;
    criterion(
        6,
        "phase-matched enhancement",
        false,
        pass,
        format!("N = {n}: amplitude at k_e = k_tot {matched} (exactly N); ratio over 1000 directions {ratio:.1} (in [{}, {}])", 0.5 * nf, 2.0 * nf),
    )
}

/// Schemes and presets checked against the recursion values.
pub fn mc_cases() -> Vec<(Scheme, Preset)> {
    vec![
        (Scheme::TwoNodeGen, Preset::Conservative),
        (Scheme::TwoNodeTeleport, Preset::Conservative),
        (Scheme::ChainGen(2), Preset::Optimistic),
        (Scheme::ChainGen(3), Preset::Optimistic),
        (Scheme::ChainTeleport(2), Preset::Optimistic),
        (Scheme::EndToEndTeleport(2), Preset::Optimistic),
        (Scheme::NestedSwap(1), Preset::Conservative),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: u32,
    pub p_value: f64,
}

/// Goodness of fit of an attempt histogram to Geometric(`p`).
pub fn geometric_fit(hist: &std::collections::BTreeMap<u64, u64>, p: f64) -> Result<ChiSquareTest, crate::Error> {
    let chi = mc::chi_square_geometric(hist, p, 50)?;
    let dist = ChiSquared::new(chi.degrees_of_freedom as f64).map_err(|e| crate::Error::Format(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic: chi.statistic,
        degrees_of_freedom: chi.degrees_of_freedom,
        p_value: dist.sf(chi.statistic),
    })
}

pub fn monte_carlo(opts: CheckOptions) -> Criterion {
    let mut parts = Vec::new();
    let mut pass = true;
    for (scheme, preset) in mc_cases() {
        let params = preset.params();
        let cfg = TrialConfig::new(params, scheme, opts.mc_trials, opts.seed);
        let result = parallel::simulate(&cfg).and_then(|s| Ok((mc::analytic(&params, scheme)?, s)));
        match result {
            Ok((analytic, stats)) => {
                let cmp = mc::compare_to_analytic(&stats, &analytic);
                let ok = cmp.z_score.abs() <= 3.0;
                pass &= ok;
                parts.push(format!("{scheme} {}: z = {:+.2}", preset.name(), cmp.z_score));
                if scheme == Scheme::TwoNodeGen {
                    match geometric_fit(&stats.attempts_histogram, params.p_g()) {
                        Ok(t) => {
                            pass &= t.p_value >= 0.01;
                            parts.push(format!(
                                "chi2 = {:.1} on {} dof, p = {:.3}",
                                t.statistic, t.degrees_of_freedom, t.p_value
                            ));
                        }
                        Err(e) => {
                            pass = false;
                            parts.push(format!("chi2 failed: {e}"));
                        }
                    }
                }
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{scheme}: {e}"));
            }
        }
    }
    criterion(7, "Monte Carlo vs analytic", true, pass, format!("{} trials each; {}", opts.mc_trials, parts.join("; ")))
}

pub fn nested_swap_factor(opts: CheckOptions) -> Criterion {
    let p = Preset::Conservative.params();
    let cfg = TrialConfig::new(p, Scheme::NestedSwap(1), opts.mc_trials, opts.seed.wrapping_add(1));
    match parallel::simulate(&cfg) {
        Ok(s) => {
            let factor = s.mean_time / rates::two_node_generation(&p).mean_time;
            let pass = (1.4..=1.6).contains(&factor);
            criterion(
                8,
                "nested swap factor",
                false,
                pass,
                format!("mean / (t_G/P_G) = {factor:.4} (in [1.4, 1.6]; formula 1.5)"),
            )
        }
        Err(e) => criterion(8, "nested swap factor", false, false, e.to_string()),
    }
}

/// A published multi-node figure next to the value its formula gives.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotedFigure {
    pub claim: &'static str,
    pub quoted: &'static str,
    pub computed: f64,
    pub unit: &'static str,
}

pub fn quoted_figures() -> rydrep_core::Result<Vec<QuotedFigure>> {
    let c = Preset::Conservative.params();
    let o = Preset::Optimistic.params();
    let closed = Method::ClosedForm;
    let fig = |claim, quoted, computed, unit| QuotedFigure { claim, quoted, computed, unit };
    Ok(vec![
        fig(
            "hop-by-hop teleport, 3 nodes, optimistic",
            "145 ms",
            rates::chain_teleportation(&o, 2, closed)?.mean_time * 1e3,
            "ms",
        ),
        fig(
            "end-to-end teleport, 3 nodes, optimistic",
            "34 ms",
            rates::end_to_end_teleportation(&o, 2, closed)?.mean_time * 1e3,
            "ms",
        ),
        fig(
            "end-to-end teleport, 6 nodes, optimistic",
            "90 s",
            rates::end_to_end_teleportation(&o, 5, closed)?.mean_time,
            "s",
        ),
        fig(
            "hop-by-hop teleport, 6 nodes, optimistic",
            "about one hour",
            rates::chain_teleportation(&o, 5, closed)?.mean_time,
            "s",
        ),
        fig(
            "probabilistic / deterministic swapping, 3 nodes, conservative",
            "400",
            rates::multi_node_generation(&c, 2, closed)?.mean_time
                / rates::deterministic_swap_generation(&c, 1).mean_time,
            "",
        ),
        fig(
            "probabilistic / deterministic swapping, 3 nodes, optimistic",
            "100",
            rates::multi_node_generation(&o, 2, closed)?.mean_time
                / rates::deterministic_swap_generation(&o, 1).mean_time,
            "",
        ),
    ])
}

/// The orderings the multi-node discussion relies on.
pub fn multi_node_orderings() -> rydrep_core::Result<Vec<String>> {
    let mut broken = Vec::new();
    for preset in Preset::ALL {
        let p = preset.params();
        for method in [Method::Recursion, Method::ClosedForm] {
            for n in 2..=10 {
                let t = rates::chain_teleportation(&p, n, method)?.mean_time;
                let e = rates::end_to_end_teleportation(&p, n, method)?.mean_time;
                if e >= t {
                    broken.push(format!(
                        "{} {method:?} n = {n}: end-to-end {e:e} s not below hop-by-hop {t:e} s",
                        preset.name()
                    ));
                }
            }
        }
        for k in 1..=4 {
            let det = rates::deterministic_swap_generation(&p, k).mean_time;
            for method in [Method::Recursion, Method::ClosedForm] {
                let prob = rates::multi_node_generation(&p, 1 << k, method)?.mean_time;
                if det >= prob {
                    broken.push(format!(
                        "{} {method:?} k = {k}: deterministic {det:e} s not below probabilistic {prob:e} s",
                        preset.name()
                    ));
                }
            }
        }
    }
    Ok(broken)
}

pub fn multi_node_figures() -> Criterion {
    let figures = match quoted_figures() {
        Ok(f) => f,
        Err(e) => return criterion(9, "multi-node figures", false, false, e.to_string()),
    };
    let listed: Vec<String> = figures
        .iter()
        .map(|f| format!("{} {}: {:.4} vs {}", f.claim, f.unit, f.computed, f.quoted).replace("  ", " "))
        .collect();
    let (pass, order) = match multi_node_orderings() {
        Ok(b) if b.is_empty() => (true, "orderings hold".to_string()),
        Ok(b) => (false, b.join("; ")),
        Err(e) => (false, e.to_string()),
    };
    criterion(
        9,
        "multi-node figures (documented discrepancy)",
        false,
        pass,
        format!("{order}; computed vs quoted: {}", listed.join("; ")),
    )
}

pub fn od_efficiency() -> Criterion {
    match rates::p_gamma_from_od(3.0) {
        Ok(e) => {
            let preset = Preset::Conservative.params().p_gamma;
            let pass = (e.value - 0.3485).abs() <= 1e-4;
            criterion(
                10,
                "p_gamma at OD = 3",
                true,
                pass,
                format!("{:.6} (0.3485 +- 1e-4); rounded to 0.3 in the text, presets use {preset}", e.value),
            )
        }
        Err(e) => criterion(10, "p_gamma at OD = 3", true, false, e.to_string()),
    }
}

/// Every criterion in order.
pub fn run_all(opts: CheckOptions) -> Vec<Criterion> {
    vec![
        headline_rates(),
        limits(),
        zhao(),
        protocol_algebra(opts.seed),
        bell_analyzer(),
        phase_matching(opts.seed),
        monte_carlo(opts),
        nested_swap_factor(opts),
        multi_node_figures(),
        od_efficiency(),
    ]
}

/// True when no hard criterion failed.
pub fn hard_pass(results: &[Criterion]) -> bool {
    results.iter().all(|c| c.pass || !c.hard)
}
