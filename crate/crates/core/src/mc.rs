//! Monte Carlo of the attempt/retry processes behind the rate formulas.
//!
//! Trial `i` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so
//! trials are independent of each other and of execution order. Callers may
//! run trials on any number of workers and aggregate the outcomes in index
//! order with [`TrialStats::from_outcomes`].

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::float;
use crate::rates::{self, EfficiencyParams, Method, RateResult};

/// Which process to simulate. Chain lengths count links (nodes - 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scheme {
    TwoNodeGen,
    TwoNodeTeleport,
    ChainGen(u32),
    ChainTeleport(u32),
    EndToEndTeleport(u32),
    /// Nesting level `k` over `2^k` links with deterministic swaps.
    NestedSwap(u32),
}

impl Scheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Scheme::ChainGen(0) | Scheme::ChainTeleport(0) | Scheme::EndToEndTeleport(0) => {
                Err(invalid!("chain schemes need at least one link"))
            }
            Scheme::NestedSwap(k) if k > 20 => Err(invalid!("nesting level {k} is too deep")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::TwoNodeGen => f.write_str("two_node_gen"),
            Scheme::TwoNodeTeleport => f.write_str("two_node_teleport"),
            Scheme::ChainGen(n) => write!(f, "chain_gen({n})"),
            Scheme::ChainTeleport(n) => write!(f, "chain_teleport({n})"),
            Scheme::EndToEndTeleport(n) => write!(f, "end_to_end_teleport({n})"),
            Scheme::NestedSwap(k) => write!(f, "nested_swap({k})"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    /// Accepts `two_node_gen`, `chain_gen(3)` and `chain_gen:3`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.find(['(', ':']) {
            Some(i) => {
                let rest = s[i + 1..].trim_end_matches(')');
                let n: u32 =
                    rest.trim().parse().map_err(|_| Error::Parse(alloc::format!("bad scheme argument in `{s}`")))?;
                (&s[..i], Some(n))
            }
            None => (s, None),
        };
        let need =
            |arg: Option<u32>| arg.ok_or_else(|| Error::Parse(alloc::format!("scheme `{name}` needs an argument")));
        let scheme = match name {
            "two_node_gen" => Scheme::TwoNodeGen,
            "two_node_teleport" => Scheme::TwoNodeTeleport,
            "chain_gen" => Scheme::ChainGen(need(arg)?),
            "chain_teleport" => Scheme::ChainTeleport(need(arg)?),
            "end_to_end_teleport" => Scheme::EndToEndTeleport(need(arg)?),
            "nested_swap" => Scheme::NestedSwap(need(arg)?),
            _ => return Err(Error::Parse(alloc::format!("unknown scheme `{name}`"))),
        };
        if arg.is_some() && matches!(scheme, Scheme::TwoNodeGen | Scheme::TwoNodeTeleport) {
            return Err(Error::Parse(alloc::format!("scheme `{name}` takes no argument")));
        }
        Ok(scheme)
    }
}

/// How per-attempt successes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Sampler {
    /// One uniform per attempt, and a single inverse-CDF draw for the
    /// number of attempts of a plain retry loop.
    #[default]
    Geometric,
    /// Every Rydberg transition, photon collection and Bell herald drawn as
    /// its own Bernoulli variable.
    Stepwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialConfig {
    pub params: EfficiencyParams,
    pub scheme: Scheme,
    pub trials: u64,
    pub seed: u64,
    /// Longest time the oldest entangled memory may wait; `None` disables.
    pub memory_lifetime: Option<f64>,
    pub sampler: Sampler,
}

impl TrialConfig {
    pub fn new(params: EfficiencyParams, scheme: Scheme, trials: u64, seed: u64) -> Self {
        TrialConfig { params, scheme, trials, seed, memory_lifetime: None, sampler: Sampler::Geometric }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.scheme.validate()?;
        if self.trials < 1 {
            return Err(invalid!("trials must be at least 1"));
        }
        if let Some(l) = self.memory_lifetime {
            if l.is_nan() || l <= 0.0 {
                return Err(invalid!("memory lifetime must be positive, got {l}"));
            }
        }
        Ok(())
    }
}

/// One simulated run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub time: f64,
    /// Attempts of the outermost retry loop.
    pub attempts: u64,
    /// Waiting time of the oldest memory at completion.
    pub memory_age: f64,
    /// False when the memory lifetime was exceeded.
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialStats {
    pub trials: u64,
    /// Mean over successful trials.
    pub mean_time: f64,
    /// Sample standard deviation over the square root of the successful
    /// trial count; infinite with fewer than two.
    pub std_error: f64,
    pub attempts_histogram: BTreeMap<u64, u64>,
    pub success_fraction: f64,
}

impl TrialStats {
    /// Aggregates outcomes in the order given.
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = TrialOutcome>) -> TrialStats {
        let mut trials = 0u64;
        let mut ok = 0u64;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        let mut hist = BTreeMap::new();
        for o in outcomes {
            trials += 1;
            *hist.entry(o.attempts).or_insert(0) += 1;
            if !o.success {
                continue;
            }
            ok += 1;
            // Welford update.
            let delta = o.time - mean;
            mean += delta / ok as f64;
            m2 += delta * (o.time - mean);
        }
        let std_error =
            if ok >= 2 { float::sqrt(m2 / (ok - 1) as f64) / float::sqrt(ok as f64) } else { f64::INFINITY };
        TrialStats {
            trials,
            mean_time: if ok > 0 { mean } else { f64::NAN },
            std_error,
            attempts_histogram: hist,
            success_fraction: if trials > 0 { ok as f64 / trials as f64 } else { 0.0 },
        }
    }
}

/// Random source for trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Ctx<'a> {
    p: &'a EfficiencyParams,
    sampler: Sampler,
    rng: ChaCha8Rng,
}

/// Success probabilities of the elementary attempts.
#[derive(Clone, Copy)]
enum Stage {
    /// Two nodes prepare `n` steps each, two photons collected per node,
    /// one Bell herald.
    Herald(u32),
    /// `n_T` Rydberg transitions.
    Teleport,
}

impl Ctx<'_> {
    fn bernoulli(&mut self, p: f64) -> bool {
        self.rng.random::<f64>() < p
    }

    fn probability(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Herald(n) => {
                let per_node = float::powi(self.p.p_r, n as i32) * self.p.p_gamma * self.p.p_gamma;
                per_node * per_node * self.p.p_b
            }
            Stage::Teleport => self.p.p_t(),
        }
    }

    fn succeeds(&mut self, stage: Stage) -> bool {
        match self.sampler {
            Sampler::Geometric => {
                let p = self.probability(stage);
                self.bernoulli(p)
            }
            Sampler::Stepwise => match stage {
                Stage::Herald(n) => {
                    let (pr, pg, pb) = (self.p.p_r, self.p.p_gamma, self.p.p_b);
                    for _node in 0..2 {
                        for _ in 0..n {
                            if !self.bernoulli(pr) {
                                return false;
                            }
                        }
                        for _ in 0..2 {
                            if !self.bernoulli(pg) {
                                return false;
                            }
                        }
                    }
                    self.bernoulli(pb)
                }
                Stage::Teleport => {
                    let pr = self.p.p_r;
                    (0..self.p.n_t).all(|_| self.bernoulli(pr))
                }
            },
        }
    }

    /// Attempts up to and including the first success.
    fn attempts_until_success(&mut self, stage: Stage) -> u64 {
        match self.sampler {
            Sampler::Geometric => {
                let p = self.probability(stage);
                geometric(&mut self.rng, p)
            }
            Sampler::Stepwise => {
                let mut k = 1;
                while !self.succeeds(stage) {
                    k += 1;
                }
                k
            }
        }
    }

    /// Two-node generation: (time, attempts, memory age).
    fn generation(&mut self) -> (f64, u64, f64) {
        let k = self.attempts_until_success(Stage::Herald(self.p.n_g));
        let t_g = self.p.t_g();
        (k as f64 * t_g, k, t_g)
    }

    fn teleport(&mut self) -> (f64, u64, f64) {
        let t_t = self.p.t_t();
        let mut time = 0.0;
        let mut k = 0;
        loop {
            k += 1;
            let (g, _, age) = self.generation();
            time += g + t_t;
            if self.succeeds(Stage::Teleport) {
                return (time, k, age + t_t);
            }
        }
    }

    /// Entanglement over `n` links; every failed extension rebuilds the
    /// shorter chain from scratch.
    fn chain_gen(&mut self, n: u32) -> (f64, u64, f64) {
        if n == 1 {
            return self.generation();
        }
        let step = self.p.n_s as f64 * self.p.t_o + self.p.round_trip();
        let mut time = 0.0;
        let mut k = 0;
        loop {
            k += 1;
            let (inner, _, age) = self.chain_gen(n - 1);
            time += inner + step;
            if self.succeeds(Stage::Herald(self.p.n_s)) {
                return (time, k, age + step);
            }
        }
    }

    /// Hop-by-hop teleportation; a failed link or teleport on the last hop
    /// restarts the whole chain, as the mean-time recursion assumes.
    fn chain_teleport(&mut self, n: u32) -> (f64, u64, f64) {
        if n == 1 {
            return self.teleport();
        }
        let (t_g, t_t) = (self.p.t_g(), self.p.t_t());
        let mut time = 0.0;
        let mut k = 0;
        loop {
            k += 1;
            let mut hop_age: f64 = 0.0;
            loop {
                let (inner, _, age) = self.chain_teleport(n - 1);
                hop_age = hop_age.max(age);
                time += inner + t_g;
                if self.succeeds(Stage::Herald(self.p.n_g)) {
                    break;
                }
            }
            time += t_t;
            if self.succeeds(Stage::Teleport) {
                return (time, k, hop_age.max(t_g + t_t));
            }
        }
    }

    fn end_to_end(&mut self, n: u32) -> (f64, u64, f64) {
        let mut time = 0.0;
        let mut k = 0;
        loop {
            k += 1;
            let (g, _, age) = self.chain_gen(n);
            time += g;
            if self.succeeds(Stage::Teleport) {
                return (time, k, age);
            }
        }
    }

    /// Completion times of the `2^k` links; swaps are instantaneous and
    /// deterministic.
    fn nested(&mut self, k: u32) -> (f64, u64, f64) {
        let links = 1u64 << k;
        let mut first = f64::INFINITY;
        let mut last: f64 = 0.0;
        let mut attempts = 0;
        for _ in 0..links {
            let (t, a, _) = self.generation();
            first = first.min(t);
            last = last.max(t);
            attempts = attempts.max(a);
        }
        (last, attempts, last - first + self.p.t_g())
    }
}

/// Geometric number of attempts (support 1, 2, ...) by inversion.
pub fn geometric<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let u = 1.0 - rng.random::<f64>();
    let k = float::floor(float::ln(u) / float::ln_1p(-p)) + 1.0;
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}

/// Runs trial `index` of `config`.
pub fn run_trial(config: &TrialConfig, index: u64) -> TrialOutcome {
    let mut ctx = Ctx { p: &config.params, sampler: config.sampler, rng: trial_rng(config.seed, index) };
    let (time, attempts, memory_age) = match config.scheme {
        Scheme::TwoNodeGen => ctx.generation(),
        Scheme::TwoNodeTeleport => ctx.teleport(),
        Scheme::ChainGen(n) => ctx.chain_gen(n),
        Scheme::ChainTeleport(n) => ctx.chain_teleport(n),
        Scheme::EndToEndTeleport(n) => ctx.end_to_end(n),
        Scheme::NestedSwap(k) => ctx.nested(k),
    };
    let success = config.memory_lifetime.is_none_or(|l| memory_age <= l);
    TrialOutcome { time, attempts, memory_age, success }
}

/// Runs every trial sequentially.
pub fn simulate(config: &TrialConfig) -> Result<TrialStats> {
    config.validate()?;
    Ok(TrialStats::from_outcomes((0..config.trials).map(|i| run_trial(config, i))))
}

/// Mean-time value the simulation of `scheme` should converge to: the
/// recursion for chains and the `(3/2)^k` formula for nested swapping.
pub fn analytic(params: &EfficiencyParams, scheme: Scheme) -> Result<RateResult> {
    scheme.validate()?;
    match scheme {
        Scheme::TwoNodeGen => Ok(rates::two_node_generation(params)),
        Scheme::TwoNodeTeleport => Ok(rates::two_node_teleportation(params)),
        Scheme::ChainGen(n) => rates::multi_node_generation(params, n, Method::Recursion),
        Scheme::ChainTeleport(n) => rates::chain_teleportation(params, n, Method::Recursion),
        Scheme::EndToEndTeleport(n) => rates::end_to_end_teleportation(params, n, Method::Recursion),
        Scheme::NestedSwap(k) => Ok(rates::deterministic_swap_generation(params, k)),
    }
}

/// Exact mean of the maximum of `m` independent Geometric(`p`) variables,
/// by inclusion-exclusion. Nested swapping over `m` links takes this many
/// attempt periods.
pub fn expected_max_geometric(p: f64, m: u32) -> f64 {
    let q = 1.0 - p;
    let mut sum = 0.0;
    let mut binom = 1.0;
    for j in 1..=m {
        binom = binom * (m - j + 1) as f64 / j as f64;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * binom / (1.0 - float::powi(q, j as i32));
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Comparison {
    pub analytic_mean: f64,
    pub simulated_mean: f64,
    pub z_score: f64,
    pub relative_deviation: f64,
    pub pass: bool,
}

/// Passes when `|z| <= 3` or the relative deviation is at most 2%. With
/// fewer than two successful trials `z` is NaN and only the deviation
/// counts.
pub fn compare_to_analytic(stats: &TrialStats, analytic: &RateResult) -> Comparison {
    let diff = stats.mean_time - analytic.mean_time;
    let z_score = if stats.std_error.is_infinite() {
        // Too few successful trials to estimate the spread.
        f64::NAN
    } else if stats.std_error > 0.0 {
        diff / stats.std_error
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    let relative_deviation = float::abs(diff) / analytic.mean_time;
    Comparison {
        analytic_mean: analytic.mean_time,
        simulated_mean: stats.mean_time,
        z_score,
        relative_deviation,
        pass: float::abs(z_score) <= 3.0 || relative_deviation <= 0.02,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub degrees_of_freedom: u32,
    pub bins: usize,
}

/// Pearson chi-square of an attempt histogram against Geometric(`p`).
///
/// Bins are cut at the quantiles of the target distribution (about
/// `target_bins` of them) and merged until every expected count is at
/// least 5; the last bin is open-ended.
pub fn chi_square_geometric(hist: &BTreeMap<u64, u64>, p: f64, target_bins: usize) -> Result<ChiSquare> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid!("geometric parameter must lie in (0, 1), got {p}"));
    }
    let total: u64 = hist.values().sum();
    if total == 0 {
        return Err(invalid!("empty histogram"));
    }
    let n = total as f64;
    let ln_q = float::ln_1p(-p);
    // Survival function P(K >= a) = q^(a-1).
    let surv = |a: u64| float::powf(1.0 - p, (a - 1) as f64);
    let mut edges: Vec<u64> = Vec::new();
    for i in 0..target_bins.max(2) {
        let frac = i as f64 / target_bins.max(2) as f64;
        let a = float::floor(float::ln(1.0 - frac) / ln_q) as u64 + 1;
        if edges.last() != Some(&a) {
            edges.push(a);
        }
    }
    // Expected and observed counts per [edges[i], edges[i+1]).
    let mut bins: Vec<(f64, f64)> = Vec::new();
    for (i, &lo) in edges.iter().enumerate() {
        let hi = edges.get(i + 1).copied();
        let expected = n * (surv(lo) - hi.map_or(0.0, surv));
        let observed: u64 = match hi {
            Some(h) => hist.range(lo..h).map(|(_, c)| c).sum(),
            None => hist.range(lo..).map(|(_, c)| c).sum(),
        };
        bins.push((expected, observed as f64));
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for b in bins {
        match merged.last_mut() {
            Some(last) if last.0 < 5.0 => {
                last.0 += b.0;
                last.1 += b.1;
            }
            _ => merged.push(b),
        }
    }
    while merged.len() > 1 && merged.last().is_some_and(|b| b.0 < 5.0) {
        let b = merged.pop().expect("len > 1");
        let last = merged.last_mut().expect("len > 1");
        last.0 += b.0;
        last.1 += b.1;
    }
    if merged.len() < 2 {
        return Err(invalid!("too few trials for a chi-square test"));
    }
    let statistic = merged.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    Ok(ChiSquare { statistic, degrees_of_freedom: merged.len() as u32 - 1, bins: merged.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::Preset;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn cfg(params: EfficiencyParams, scheme: Scheme, trials: u64) -> TrialConfig {
        TrialConfig::new(params, scheme, trials, 42)
    }

    #[test]
    fn lossless_runs_take_exactly_one_attempt() {
        let p = EfficiencyParams { p_r: 1.0, p_gamma: 1.0, p_b: 1.0, ..Preset::Conservative.params() };
        for sampler in [Sampler::Geometric, Sampler::Stepwise] {
            let s = simulate(&TrialConfig { sampler, ..cfg(p, Scheme::TwoNodeGen, 100) }).unwrap();
            assert_eq!(s.mean_time, p.t_g());
            assert_eq!(s.std_error, 0.0);
            assert_eq!(s.attempts_histogram.get(&1), Some(&100));
        }
    }

    #[test]
    fn identical_seeds_identical_stats() {
        let c = cfg(Preset::Optimistic.params(), Scheme::ChainTeleport(2), 2000);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
        let other = TrialConfig { seed: 43, ..c };
        assert_ne!(simulate(&c).unwrap().mean_time, simulate(&other).unwrap().mean_time);
    }

    #[test]
    fn trial_order_does_not_matter() {
        let c = cfg(Preset::Optimistic.params(), Scheme::TwoNodeTeleport, 50);
        let fwd: Vec<_> = (0..50).map(|i| run_trial(&c, i)).collect();
        let rev: Vec<_> = (0..50).rev().map(|i| run_trial(&c, i)).collect();
        assert!(fwd.iter().zip(rev.iter().rev()).all(|(a, b)| a == b));
    }

    #[test]
    fn single_trial_has_unbounded_error() {
        let s = simulate(&cfg(Preset::Conservative.params(), Scheme::TwoNodeGen, 1)).unwrap();
        assert!(s.std_error.is_infinite());
        assert!(s.mean_time > 0.0);
        let cmp = compare_to_analytic(&s, &analytic(&Preset::Conservative.params(), Scheme::TwoNodeGen).unwrap());
        assert!(cmp.z_score.is_nan());
    }

    #[test]
    fn every_scheme_matches_its_analytic_mean() {
        let o = Preset::Optimistic.params();
        for scheme in [
            Scheme::TwoNodeGen,
            Scheme::TwoNodeTeleport,
            Scheme::ChainGen(2),
            Scheme::ChainTeleport(2),
            Scheme::EndToEndTeleport(2),
            Scheme::NestedSwap(1),
        ] {
            let s = simulate(&cfg(o, scheme, 20_000)).unwrap();
            let mut a = analytic(&o, scheme).unwrap();
            if let Scheme::NestedSwap(k) = scheme {
                // At this P_G the (3/2)^k shortcut is off by a few percent.
                a = RateResult::new(o.t_g() * expected_max_geometric(o.p_g(), 1 << k), 1.0);
            }
            let cmp = compare_to_analytic(&s, &a);
            assert!(cmp.z_score.abs() < 4.0, "{scheme}: {cmp:?}");
        }
    }

    #[test]
    fn stepwise_and_geometric_agree() {
        let p = EfficiencyParams { p_r: 0.95, p_gamma: 0.9, ..Preset::Optimistic.params() };
        for scheme in [Scheme::TwoNodeGen, Scheme::TwoNodeTeleport, Scheme::ChainGen(2)] {
            let g = simulate(&cfg(p, scheme, 20_000)).unwrap();
            let s = simulate(&TrialConfig { sampler: Sampler::Stepwise, ..cfg(p, scheme, 20_000) }).unwrap();
            let se = float::sqrt(g.std_error * g.std_error + s.std_error * s.std_error);
            assert!((g.mean_time - s.mean_time).abs() < 4.0 * se, "{scheme}");
        }
    }

    #[test]
    fn attempt_counts_are_geometric() {
        let p = Preset::Optimistic.params();
        let s = simulate(&cfg(p, Scheme::TwoNodeGen, 20_000)).unwrap();
        let chi = chi_square_geometric(&s.attempts_histogram, p.p_g(), 30).unwrap();
        // Loose bound: mean + 5 sd of the chi-square distribution.
        let dof = chi.degrees_of_freedom as f64;
        assert!(chi.statistic < dof + 5.0 * float::sqrt(2.0 * dof), "{chi:?}");
        // A wrong parameter is rejected.
        let bad = chi_square_geometric(&s.attempts_histogram, p.p_g() * 1.2, 30).unwrap();
        assert!(bad.statistic > dof + 5.0 * float::sqrt(2.0 * dof), "{bad:?}");
    }

    #[test]
    fn max_of_geometrics() {
        // One variable: 1/p.
        assert!((expected_max_geometric(0.25, 1) - 4.0).abs() < 1e-12);
        // Two: 2/p - 1/(1 - q^2).
        let p: f64 = 0.1;
        let want = 2.0 / p - 1.0 / (1.0 - (1.0 - p) * (1.0 - p));
        assert!((expected_max_geometric(p, 2) - want).abs() < 1e-9);
        // Small p: ratio to 1/p approaches the harmonic number.
        let r = expected_max_geometric(1e-5, 4) * 1e-5;
        assert!((r - 25.0 / 12.0).abs() < 1e-3);
    }

    #[test]
    fn memory_lifetime_truncates() {
        let p = Preset::Optimistic.params();
        let mut c = cfg(p, Scheme::NestedSwap(1), 2000);
        c.memory_lifetime = Some(10.0 * p.t_g());
        let s = simulate(&c).unwrap();
        assert!(s.success_fraction > 0.0 && s.success_fraction < 1.0, "{}", s.success_fraction);
        c.memory_lifetime = None;
        assert_eq!(simulate(&c).unwrap().success_fraction, 1.0);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::TwoNodeGen, Scheme::ChainGen(3), Scheme::NestedSwap(2), Scheme::EndToEndTeleport(5)] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("chain_teleport:2".parse::<Scheme>().unwrap(), Scheme::ChainTeleport(2));
        assert!("chain_gen".parse::<Scheme>().is_err());
        assert!("two_node_gen(2)".parse::<Scheme>().is_err());
        assert!(simulate(&cfg(Preset::Optimistic.params(), Scheme::ChainGen(0), 1)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn geometric_is_at_least_one(seed in any::<u64>(), p in 1e-6f64..1.0) {
            let mut rng = trial_rng(seed, 0);
            prop_assert!(geometric(&mut rng, p) >= 1);
        }

        #[test]
        fn stats_error_matches_definition(times in proptest::collection::vec(1e-6f64..1.0, 2..50)) {
            let outs = times.iter().map(|&t| TrialOutcome { time: t, attempts: 1, memory_age: 0.0, success: true });
            let s = TrialStats::from_outcomes(outs);
            let n = times.len() as f64;
            let mean = times.iter().sum::<f64>() / n;
            let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0);
            prop_assert!((s.mean_time - mean).abs() <= 1e-12 * mean.max(1.0));
            prop_assert!((s.std_error - float::sqrt(var / n)).abs() <= 1e-9 * s.std_error.max(1e-12));
        }
    }
}
