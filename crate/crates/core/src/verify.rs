//! Invariant suites with a pass/fail table, at pinned parameters.
//!
//! Each check is also exposed on its own with explicit sizes so that longer
//! runs can reuse it. Checks that depend on the digit functional take it as a
//! parameter, which lets a deliberately broken implementation be shown to fail.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::groundstate::{
    count_ground_patterns, count_ground_states, energy_increment_recursive,
    energy_increment_with, excess_increment_recursive, ground_energy, ground_state_weight,
    is_ground_state, log_z_ground, min_partition,
};
use crate::numtheory::{digits_base, gamma_unchecked};
use crate::oracle::{
    brute_min_energy, exact_count_distribution, general_instance, ground_patterns_brute,
    two_coordinate_instance,
};
use crate::partition::{hamiltonian, induce_tree};
use crate::sampler::SamplerState;
use crate::stats::{chi_square, least_squares};
use crate::zfun::{build_tables, two_point_series};
use crate::{base_level, Error, Result};

pub type GammaFn = fn(u64, u32) -> u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Numtheory,
    Groundstate,
    Zbounds,
    Sampler,
    Energygap,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["numtheory", "groundstate", "zbounds", "sampler", "energygap", "all"];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "numtheory" => Suite::Numtheory,
            "groundstate" => Suite::Groundstate,
            "zbounds" => Suite::Zbounds,
            "sampler" => Suite::Sampler,
            "energygap" => Suite::Energygap,
            "all" => Suite::All,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown suite {s:?}; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<11} {:<width$}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.detail
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn timed(suite: &'static str, name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Check {
        suite,
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs a suite with the built-in digit functional.
pub fn run(suite: Suite) -> Report {
    run_with(suite, gamma_unchecked)
}

pub fn run_with(suite: Suite, gamma: GammaFn) -> Report {
    let mut report = Report::default();
    let want = |s: Suite| suite == s || suite == Suite::All;
    if want(Suite::Numtheory) {
        report.checks.extend(numtheory_suite(gamma));
    }
    if want(Suite::Groundstate) {
        report.checks.extend(groundstate_suite(gamma));
    }
    if want(Suite::Zbounds) {
        report.checks.extend(zbounds_suite());
    }
    if want(Suite::Sampler) {
        report.checks.extend(sampler_suite());
    }
    if want(Suite::Energygap) {
        report.checks.extend(energygap_suite());
    }
    report
}

fn numtheory_suite(gamma: GammaFn) -> Vec<Check> {
    const S: &str = "numtheory";
    vec![
        timed(S, "gamma examples", || {
            let got = [gamma(8, 3), gamma(9, 3), gamma(7, 3), gamma(0, 3)];
            Ok((got == [2, 3, 7, 0], format!("{got:?}")))
        }),
        timed(S, "digit round trip", || {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..10_000 {
                let n: u64 = rng.gen();
                let d = rng.gen_range(3..=16);
                if digits_base(n, d)?.value() != Some(n as u128) {
                    return Ok((false, format!("n={n} d={d}")));
                }
            }
            Ok((true, "10000 values".into()))
        }),
        timed(S, "gamma properties", || {
            let v: u64 = (3..=5)
                .map(|d| gamma_property_violations(d, 20_000, 1_000_000, 7, growth_constant(d), gamma))
                .sum();
            Ok((v == 0, format!("{v} violations in 60000 pairs, sharp growth constant")))
        }),
        timed(S, "gamma single step", || {
            let v: u64 = (3..=5).map(|d| single_step_violations(d, 200_000, gamma)).sum();
            Ok((v == 0, format!("{v} violations, m < 200000")))
        }),
    ]
}

/// `sup_n gamma(n) / n^{(d-2)/d} = (2^d - 1) / (2^{d-2} - 1)`, approached at
/// `n = 2^{dk} - 1` (all digits maximal).
pub fn growth_constant(d: u32) -> f64 {
    ((1u64 << d) - 1) as f64 / ((1u64 << (d - 2)) - 1) as f64
}

/// Counts pairs `(n, r)` violating subadditivity, the increment bound
/// `gamma(n+r) <= gamma(n) + c r^{(d-2)/d}` or the growth bound
/// `gamma(n) <= c n^{(d-2)/d}` (relative slack `1e-9`).
pub fn gamma_property_violations(d: u32, pairs: u64, max: u64, seed: u64, c: f64, gamma: GammaFn) -> u64 {
    gamma_property_counts(d, pairs, max, seed, c, gamma).iter().sum()
}

/// `[subadditivity, increment, growth]` violation counts.
pub fn gamma_property_counts(d: u32, pairs: u64, max: u64, seed: u64, c: f64, gamma: GammaFn) -> [u64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ d as u64);
    let e = (d - 2) as f64 / d as f64;
    let bound = |x: u64| c * (x as f64).powf(e) * (1.0 + 1e-9);
    let mut bad = [0; 3];
    for _ in 0..pairs {
        let n = rng.gen_range(0..=max);
        let r = rng.gen_range(0..=max);
        let (gn, gr, gs) = (gamma(n, d), gamma(r, d), gamma(n + r, d));
        bad[0] += u64::from(gs > gn + gr);
        bad[1] += u64::from(gs as f64 > gn as f64 + bound(r));
        bad[2] += u64::from(gn as f64 > bound(n));
    }
    bad
}

/// Counts `m < limit` with `gamma(m + 1) > gamma(m) + 1`.
pub fn single_step_violations(d: u32, limit: u64, gamma: GammaFn) -> u64 {
    let mut prev = gamma(0, d);
    let mut bad = 0;
    for m in 0..limit {
        let next = gamma(m + 1, d);
        if next > prev + 1 {
            bad += 1;
        }
        prev = next;
    }
    bad
}

fn groundstate_suite(gamma: GammaFn) -> Vec<Check> {
    const S: &str = "groundstate";
    vec![
        timed(S, "energy examples", || {
            let l: Vec<u128> = [2, 8, 9].iter().map(|&n| ground_energy(n, 3)).collect::<Result<_>>()?;
            let dn = [energy_increment_with(8, 3, gamma), energy_increment_with(2, 3, gamma)];
            let ok = l == [2, 56, 74] && dn == [Some(18), Some(4)];
            Ok((ok, format!("L={l:?} D8,D2={dn:?}")))
        }),
        timed(S, "increment coherence", || {
            let bad: u64 = (3..=5).map(|d| increment_mismatches(d, 100_000, gamma)).sum::<Result<u64>>()?;
            Ok((bad == 0, format!("{bad} mismatches, n < 100000, d=3..5")))
        }),
        timed(S, "ground counts", || {
            let b9 = count_ground_states(9, 3)?;
            let ratio = gsw_ratio_is_seven_sixteenths()?;
            let ok = b9 == BigUint::from(469_762_048u64) && ratio;
            Ok((ok, format!("b_9={b9}, GSW(9)/GSW(8)=7/16: {ratio}")))
        }),
        timed(S, "pattern brute force", || {
            let bad = pattern_mismatches(8)?;
            Ok((bad.is_empty(), format!("mismatches at n={bad:?}, n <= 8")))
        }),
        timed(S, "minimizers", || {
            let bad = minimizer_mismatches(3, 2..=8)?;
            Ok((bad.is_empty(), format!("mismatches at n={bad:?}, n <= 8")))
        }),
        timed(S, "canonical trees", || {
            for n in 0..2000u64 {
                let t = min_partition(n, 3)?;
                if !is_ground_state(&t) || hamiltonian(&t)? != BigUint::from(ground_energy(n, 3)?) {
                    return Ok((false, format!("n={n}")));
                }
            }
            Ok((true, "n < 2000".into()))
        }),
        timed(S, "weight bracket", || {
            let worst = gsw_ratio_constant(3, 20_000)?;
            let c = 6.0 * std::f64::consts::LN_2;
            Ok((worst <= c, format!("max |log ratio|/log(n+2) = {worst:.4} <= {c:.4}")))
        }),
    ]
}

/// Counts `n < limit` where the closed form, both recursions and the
/// telescoped energies disagree.
pub fn increment_mismatches(d: u32, limit: u64, gamma: GammaFn) -> Result<u64> {
    let mut bad = 0;
    let mut prev = ground_energy(0, d)?;
    for n in 0..limit {
        let next = ground_energy(n + 1, d)?;
        let rec = energy_increment_recursive(n, d);
        let closed = energy_increment_with(n, d, gamma);
        let excess = excess_increment_recursive(n, d);
        if closed != Some(rec) || next - prev != rec || excess + 2 * n as u128 != rec {
            bad += 1;
        }
        prev = next;
    }
    Ok(bad)
}

/// `GSW(9) / GSW(8) = 7/16` at `d = 3`, by exact cross-multiplication:
/// `16 b_9 2^{-54} = 7 b_8 2^{-24}`.
pub fn gsw_ratio_is_seven_sixteenths() -> Result<bool> {
    let b9 = count_ground_states(9, 3)?;
    let b8 = count_ground_states(8, 3)?;
    Ok(b9 * 16u32 == (b8 * 7u32) << 30)
}

/// `n <= max_n` where the pattern recursion disagrees with brute force.
pub fn pattern_mismatches(max_n: u64) -> Result<Vec<u64>> {
    let mut bad = Vec::new();
    for n in 0..=max_n {
        let (e, c) = ground_patterns_brute(n, 3)?;
        if e != ground_energy(n, 3)? || BigUint::from(c) != count_ground_patterns(n, base_level(n, 3), 3)? {
            bad.push(n);
        }
    }
    Ok(bad)
}

/// `n` where the brute-force minimum differs from the closed form, or where
/// the minimizing trees are not exactly the balanced ones.
pub fn minimizer_mismatches(d: u32, ns: std::ops::RangeInclusive<u64>) -> Result<Vec<u64>> {
    let mut bad = Vec::new();
    for n in ns {
        let b = brute_min_energy(n, d)?;
        let ok = b.energy == ground_energy(n, d)?
            && b.all.iter().all(|(t, h, _)| (*h == b.energy) == is_ground_state(t));
        if !ok {
            bad.push(n);
        }
    }
    Ok(bad)
}

/// `max_n |log(GSW(n+1)/GSW(n))| / log(n+2)`.
pub fn gsw_ratio_constant(d: u32, limit: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut prev = ground_state_weight(0, d)?.ln();
    for n in 0..limit {
        let next = ground_state_weight(n + 1, d)?.ln();
        worst = worst.max((next - prev).abs() / ((n + 2) as f64).ln());
        prev = next;
    }
    Ok(worst)
}

fn zbounds_suite() -> Vec<Check> {
    const S: &str = "zbounds";
    let mut out = Vec::new();
    for d in [3, 4] {
        for beta in [0.25, 1.0, 4.0] {
            out.push(timed(S, &format!("brackets d={d} beta={beta}"), || {
                let v = bracket_violations(128, beta, d)?;
                Ok((v.is_empty(), format!("violations at n={v:?}, n <= 128")))
            }));
        }
    }
    out.push(timed(S, "two-point series", || {
        let worst = two_point_error(&[0.0, 0.25, 1.0, 4.0], &[3, 4])?;
        Ok((worst <= 1e-10, format!("max error {worst:.2e}")))
    }));
    out.push(timed(S, "exact small systems", || {
        let mut worst: f64 = 0.0;
        for (n, beta) in [(3u64, 0.5), (4, 1.0)] {
            let ex = exact_count_distribution(n, beta, 3)?;
            let t = build_tables(n, beta, 3, 6)?;
            worst = worst.max((ex.log_z - t.log_z(n, 0).ln()).abs());
        }
        Ok((worst <= 1e-9, format!("max |log Z - oracle| = {worst:.2e}")))
    }));
    out.push(timed(S, "ratio residual trend", || {
        let t = ratio_residual_trend(128, 1.0, 3)?;
        Ok((t.0 <= 2.0 * t.1, format!("slope {:.3e} se {:.3e}", t.0, t.1)))
    }));
    out
}

/// `n <= max_n` where `log Z` leaves
/// `[max(log_z_ground, -beta L_n - (d ln 2 + 1) n) - 1e-9, -beta L_n + 1e-9]`.
pub fn bracket_violations(max_n: u64, beta: f64, d: u32) -> Result<Vec<u64>> {
    let t = build_tables(max_n, beta, d, crate::zfun::DEFAULT_DEPTH_PAD)?;
    let mut bad = Vec::new();
    for n in 0..=max_n {
        let lz = t.log_z(n, 0).ln();
        let top = -beta * ground_energy(n, d)? as f64;
        let top = if top == 0.0 { 0.0 } else { top };
        let ground = log_z_ground(n, beta, d)?.ln();
        let floor = top - (d as f64 * std::f64::consts::LN_2 + 1.0) * n as f64;
        let tol = 1e-9 * (1.0 + top.abs());
        if lz < ground - tol || lz > top + tol || lz < floor {
            bad.push(n);
        }
    }
    Ok(bad)
}

/// Largest `|log Z(2) - series|` over the grid.
pub fn two_point_error(betas: &[f64], dims: &[u32]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &d in dims {
        for &beta in betas {
            let t = build_tables(2, beta, d, 8)?;
            worst = worst.max((t.log_z(2, 0).ln() - two_point_series(beta, d)).abs());
        }
    }
    Ok(worst)
}

/// Least-squares slope (and its standard error) of
/// `|log Z(n+1)/Z(n) + beta D_n| / log^6 n` against `log n`, `3 <= n <= max_n`.
pub fn ratio_residual_trend(max_n: u64, beta: f64, d: u32) -> Result<(f64, f64)> {
    let t = build_tables(max_n + 1, beta, d, crate::zfun::DEFAULT_DEPTH_PAD * 2)?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for n in 3..=max_n {
        let ln = (n as f64).ln();
        xs.push(ln);
        ys.push(t.ratio(n).residual.abs() / ln.powi(6));
    }
    let fit = least_squares(&xs, &ys);
    Ok((fit.slope, fit.slope_se))
}

fn sampler_suite() -> Vec<Check> {
    const S: &str = "sampler";
    let mut out = Vec::new();
    for n in [2u64, 3, 4] {
        for beta in [0.5, 2.0] {
            out.push(timed(S, &format!("composition law n={n} beta={beta}"), || {
                let p = composition_p_value(n, beta, 3, 20_000, 1)?;
                Ok((p > 1e-3, format!("p = {p:.4}")))
            }));
        }
    }
    out.push(timed(S, "zero temperature limit", || {
        let bad = non_ground_samples(64, 50.0, 3, 1000, 2)?;
        Ok((bad == 0, format!("{bad} of 1000 samples not ground states")))
    }));
    out.push(timed(S, "multinomial at beta=0", || {
        let p = composition_p_value(4, 0.0, 3, 20_000, 3)?;
        Ok((p > 1e-3, format!("p = {p:.4}")))
    }));
    out.push(timed(S, "tree round trip", || {
        let t = build_tables(200, 1.0, 3, 4)?;
        let mut s = SamplerState::new(&t, 4, 0);
        for n in [0u64, 1, 2, 17, 200] {
            let tree = s.sample_partition(n)?;
            let cfg = s.sample_points(&tree)?;
            if induce_tree(&cfg)? != tree {
                return Ok((false, format!("n={n}")));
            }
        }
        Ok((true, "points induce the sampled tree".into()))
    }));
    out
}

/// Chi-square p-value of sampled level-1 compositions against the exact
/// law from exhaustive enumeration.
pub fn composition_p_value(n: u64, beta: f64, d: u32, samples: u64, seed: u64) -> Result<f64> {
    let exact = exact_count_distribution(n, beta, d)?;
    let t = build_tables(n, beta, d, 6)?;
    let mut s = SamplerState::new(&t, seed, 0);
    let mut counts: BTreeMap<Vec<u64>, u64> = exact.probabilities.keys().map(|k| (k.clone(), 0)).collect();
    let mut stray = 0u64;
    for _ in 0..samples {
        match counts.get_mut(&s.sample_counts(n, 0)?) {
            Some(c) => *c += 1,
            None => stray += 1,
        }
    }
    if stray > 0 {
        return Ok(0.0);
    }
    let observed: Vec<u64> = counts.values().copied().collect();
    let probs: Vec<f64> = exact.probabilities.values().copied().collect();
    Ok(chi_square(&observed, &probs, 5.0).p_value)
}

/// Number of samples (sizes cycling through `2..=max_n`) that are not ground
/// states.
pub fn non_ground_samples(max_n: u64, beta: f64, d: u32, samples: u64, seed: u64) -> Result<u64> {
    let t = build_tables(max_n, beta, d, 4)?;
    let mut s = SamplerState::new(&t, seed, 0);
    let mut bad = 0;
    for i in 0..samples {
        let n = 2 + i % (max_n - 1);
        if !is_ground_state(&s.sample_partition(n)?) {
            bad += 1;
        }
    }
    Ok(bad)
}

fn energygap_suite() -> Vec<Check> {
    const S: &str = "energygap";
    let mut out = Vec::new();
    for d in [3, 4] {
        out.push(timed(S, &format!("two coordinates d={d}"), || {
            let (bad, worst) = two_coordinate_gaps(d, 1000, 5)?;
            Ok((bad == 0, format!("{bad} violations, min ratio {worst:.4} >= 1")))
        }));
        out.push(timed(S, &format!("general d={d}"), || {
            let (bad, worst) = general_gaps(d, 1000, 6)?;
            Ok((bad == 0, format!("{bad} violations, min ratio {worst:.4} >= {:.4}", gap_constant(d))))
        }));
    }
    out
}

/// `1 / (2 (2^d + 1))`.
pub fn gap_constant(d: u32) -> f64 {
    1.0 / (2.0 * ((1u64 << d) as f64 + 1.0))
}

/// `(violations, smallest (H1 - H2) / (2^{(d-2)m} k^2))`.
pub fn two_coordinate_gaps(d: u32, instances: u64, seed: u64) -> Result<(u64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bad, mut worst) = (0, f64::INFINITY);
    for _ in 0..instances {
        let g = two_coordinate_instance(&mut rng, d)?;
        if g.h1 < g.h2 + g.scale {
            bad += 1;
        }
        worst = worst.min(g.ratio());
    }
    Ok((bad, worst))
}

/// `(violations, smallest (H1 - H2) / (2^{(d-2)m} sum dist^2))` over instances
/// with positive distance.
pub fn general_gaps(d: u32, instances: u64, seed: u64) -> Result<(u64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bad, mut worst) = (0, f64::INFINITY);
    for _ in 0..instances {
        let g = general_instance(&mut rng, d)?;
        let violated = if g.scale == 0 {
            g.h1 < g.h2
        } else {
            // h1 - h2 >= scale / (2 (2^d + 1)), in integers
            (g.h1 < g.h2) || (g.h1 - g.h2) * 2 * ((1u128 << d) + 1) < g.scale
        };
        if violated {
            bad += 1;
        }
        if g.scale > 0 {
            worst = worst.min(g.ratio());
        }
    }
    Ok((bad, worst))
}
