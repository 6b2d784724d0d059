//! Monte Carlo number-variance and linear-statistic experiments.
//!
//! Every replica is an exact Gibbs sample drawn on its own ChaCha stream, so
//! results are identical whatever the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::partition::{word_to_f64, DyadicCube, PointConfiguration};
use crate::sampler::SamplerState;
use crate::stats::{least_squares, LineFit, Moments};
use crate::zfun::{build_tables, LevelTables, DEFAULT_DEPTH_PAD};
use crate::{check_dim, Error, Result};

/// Measurable set whose occupation number is counted.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Cube(DyadicCube),
    /// Open ball, centre and radius as fixed-point words.
    Ball { center: Vec<u64>, radius: u64 },
    /// Half-open box `[lo, hi)`.
    Box { lo: Vec<u64>, hi: Vec<u64> },
}

fn word(x: f64) -> Result<u64> {
    crate::partition::f64_to_word(x)
}

impl Region {
    pub fn cube(cube: DyadicCube) -> Self {
        Region::Cube(cube)
    }

    /// Ball strictly inside the unit cube.
    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidArgument(format!("radius {radius}")));
        }
        if center.iter().any(|&c| c - radius <= 0.0 || c + radius >= 1.0) {
            return Err(Error::InvalidArgument(
                "ball must lie strictly inside the unit cube".into(),
            ));
        }
        Ok(Region::Ball {
            center: center.iter().map(|&c| word(c)).collect::<Result<_>>()?,
            radius: word(radius)?,
        })
    }

    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| a > b) {
            return Err(Error::InvalidArgument("box corners".into()));
        }
        let hi = hi
            .iter()
            .map(|&h| if h >= 1.0 { Ok(u64::MAX) } else { word(h) })
            .collect::<Result<_>>()?;
        Ok(Region::Box {
            lo: lo.iter().map(|&c| word(c)).collect::<Result<_>>()?,
            hi,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Cube(c) => c.dim() as usize,
            Region::Ball { center, .. } => center.len(),
            Region::Box { lo, .. } => lo.len(),
        }
    }

    /// Exact membership on fixed-point words.
    pub fn contains(&self, x: &[u64]) -> bool {
        match self {
            Region::Cube(c) => c.contains(x),
            Region::Ball { center, radius } => {
                let mut acc: u128 = 0;
                for (&xi, &ci) in x.iter().zip(center) {
                    let diff = xi.abs_diff(ci) as u128;
                    match acc.checked_add(diff * diff) {
                        Some(v) => acc = v,
                        None => return false,
                    }
                }
                acc < (*radius as u128) * (*radius as u128)
            }
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&xi, (&l, &h))| l <= xi && (xi < h || h == u64::MAX)),
        }
    }

    /// Lebesgue measure.
    pub fn volume(&self) -> f64 {
        match self {
            Region::Cube(c) => c.volume(),
            Region::Ball { center, radius } => {
                let d = center.len() as f64;
                let r = word_to_f64(*radius);
                let unit = std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0);
                unit * r.powf(d)
            }
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| {
                    let top = if h == u64::MAX { 1.0 } else { word_to_f64(h) };
                    top - word_to_f64(l)
                })
                .product(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Region::Cube(c) => {
                let coords: Vec<String> = c.coords().iter().map(|x| x.to_string()).collect();
                format!("N(cube:{}:{})", c.level(), coords.join("_"))
            }
            Region::Ball { center, radius } => {
                let cs: Vec<String> = center.iter().map(|&w| word_to_f64(w).to_string()).collect();
                format!("N(ball:{}:{})", cs.join("_"), word_to_f64(*radius))
            }
            Region::Box { lo, hi } => {
                let f = |v: &[u64]| {
                    v.iter()
                        .map(|&w| if w == u64::MAX { "1".to_string() } else { word_to_f64(w).to_string() })
                        .collect::<Vec<_>>()
                        .join("_")
                };
                format!("N(box:{}:{})", f(lo), f(hi))
            }
        }
    }
}

/// Number of points of `cfg` inside `region`.
pub fn count_in_region(cfg: &PointConfiguration, region: &Region) -> u64 {
    cfg.points().filter(|p| region.contains(p)).count() as u64
}

/// A registered test function `f: [0,1]^d -> R` with Lipschitz constant.
#[derive(Debug, Clone, Copy)]
pub struct LinearStatistic {
    pub name: &'static str,
    pub f: fn(&[f64]) -> f64,
    pub lipschitz: f64,
}

fn first_coordinate(x: &[f64]) -> f64 {
    x[0]
}

fn constant_one(_: &[f64]) -> f64 {
    1.0
}

fn cosine_wave(x: &[f64]) -> f64 {
    (2.0 * std::f64::consts::PI * x[0]).cos() * 0.5 / std::f64::consts::PI
}

impl LinearStatistic {
    pub const X1: Self = Self {
        name: "x1",
        f: first_coordinate,
        lipschitz: 1.0,
    };
    pub const ONE: Self = Self {
        name: "one",
        f: constant_one,
        lipschitz: 0.0,
    };
    pub const COS: Self = Self {
        name: "cos",
        f: cosine_wave,
        lipschitz: 1.0,
    };

    pub fn registry() -> [Self; 3] {
        [Self::X1, Self::ONE, Self::COS]
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Self::registry().into_iter().find(|s| s.name == name)
    }

    /// Largest `|f(x) - f(y)| / |x - y|` over random pairs.
    pub fn empirical_lipschitz<R: Rng>(&self, d: usize, pairs: usize, rng: &mut R) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..pairs {
            let x: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
            let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist > 0.0 {
                worst = worst.max(((self.f)(&x) - (self.f)(&y)).abs() / dist);
            }
        }
        worst
    }
}

/// `X(f) = sum_i f(x_i)`.
pub fn linear_statistic_value(cfg: &PointConfiguration, f: &LinearStatistic) -> f64 {
    let mut buf = vec![0.0; cfg.d() as usize];
    cfg.points()
        .map(|p| {
            for (b, &w) in buf.iter_mut().zip(p) {
                *b = word_to_f64(w);
            }
            (f.f)(&buf)
        })
        .sum()
}

/// Any replicate observable.
#[derive(Debug, Clone)]
pub enum Statistic {
    Count(Region),
    Linear(LinearStatistic),
}

impl Statistic {
    pub fn name(&self) -> String {
        match self {
            Statistic::Count(r) => r.name(),
            Statistic::Linear(f) => format!("X({})", f.name),
        }
    }

    pub fn evaluate(&self, cfg: &PointConfiguration) -> f64 {
        match self {
            Statistic::Count(r) => count_in_region(cfg, r) as f64,
            Statistic::Linear(f) => linear_statistic_value(cfg, f),
        }
    }

    /// Exact mean under any law with uniform one-point marginals, when known.
    pub fn expected_mean(&self, n: u64) -> Option<f64> {
        match self {
            Statistic::Count(r) => Some(r.volume() * n as f64),
            Statistic::Linear(f) if f.name == "x1" => Some(n as f64 / 2.0),
            Statistic::Linear(f) if f.name == "one" => Some(n as f64),
            Statistic::Linear(f) if f.name == "cos" => Some(0.0),
            Statistic::Linear(_) => None,
        }
    }
}

/// One replicate summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub n: u64,
    pub beta: f64,
    pub d: u32,
    pub stat: String,
    pub reps: u64,
    pub mean: f64,
    pub variance: f64,
    pub var_se: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "n,beta,d,stat,reps,mean,variance,var_se,seed";

impl ExperimentRow {
    fn from_samples(n: u64, beta: f64, d: u32, stat: String, seed: u64, xs: &[f64]) -> Self {
        let m = Moments::from_samples(xs);
        Self {
            n,
            beta,
            d,
            stat,
            reps: xs.len() as u64,
            mean: m.mean,
            variance: m.variance,
            var_se: m.variance_se,
            seed,
        }
    }

    pub fn mean_se(&self) -> f64 {
        (self.variance / self.reps as f64).sqrt()
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{:?},{},{},{},{:?},{:?},{:?},{}",
            self.n, self.beta, self.d, self.stat, self.reps, self.mean, self.variance, self.var_se, self.seed
        )
    }
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv_line());
        s.push('\n');
    }
    s
}

pub const MIN_REPS: u64 = 100;

fn replica_stream(n: u64, i: u64) -> u64 {
    (n << 32) | i
}

/// Draws `reps` exact samples at each `n` in `ns` from one table build and
/// evaluates every statistic on the same configurations.
pub fn run_grid(
    stats: &[Statistic],
    ns: &[u64],
    beta: f64,
    d: u32,
    reps: u64,
    seed: u64,
) -> Result<Vec<ExperimentRow>> {
    check_dim(d)?;
    check_reps(reps)?;
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let tables = build_tables(n_max, beta, d, DEFAULT_DEPTH_PAD)?;
    run_grid_with(&tables, stats, ns, reps, seed)
}

/// As [`run_grid`] with caller-supplied tables (`n <= tables.n()`).
pub fn run_grid_with(
    tables: &LevelTables,
    stats: &[Statistic],
    ns: &[u64],
    reps: u64,
    seed: u64,
) -> Result<Vec<ExperimentRow>> {
    check_reps(reps)?;
    let d = tables.d();
    for s in stats {
        if let Statistic::Count(r) = s {
            if r.dim() != d as usize {
                return Err(Error::InvalidArgument(format!("{} is not {d}-dimensional", r.name())));
            }
        }
    }
    let mut rows = Vec::new();
    for &n in ns {
        let values: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let mut s = SamplerState::new(tables, seed, replica_stream(n, i));
                let cfg = s.sample_configuration(n)?;
                Ok(stats.iter().map(|st| st.evaluate(&cfg)).collect())
            })
            .collect::<Result<_>>()?;
        for (j, st) in stats.iter().enumerate() {
            let xs: Vec<f64> = values.iter().map(|v| v[j]).collect();
            rows.push(ExperimentRow::from_samples(n, tables.beta(), d, st.name(), seed, &xs));
        }
    }
    Ok(rows)
}

fn check_reps(reps: u64) -> Result<()> {
    if reps < MIN_REPS {
        return Err(Error::InvalidArgument(format!("reps must be >= {MIN_REPS}, got {reps}")));
    }
    Ok(())
}

/// Variance of one statistic at one `n` from `reps` independent Gibbs samples.
pub fn estimate_variance(
    stat: &Statistic,
    n: u64,
    beta: f64,
    d: u32,
    reps: u64,
    seed: u64,
) -> Result<ExperimentRow> {
    let rows = run_grid(std::slice::from_ref(stat), &[n], beta, d, reps, seed)?;
    Ok(rows.into_iter().next().expect("one row"))
}

/// I.i.d. uniform points drawn directly, for each `n` in `ns`.
pub fn poisson_grid(stats: &[Statistic], ns: &[u64], d: u32, reps: u64, seed: u64) -> Result<Vec<ExperimentRow>> {
    check_dim(d)?;
    check_reps(reps)?;
    let mut rows = Vec::new();
    for &n in ns {
        let values: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(replica_stream(n, i));
                let words: Vec<u64> = (0..n * d as u64).map(|_| rng.gen()).collect();
                let cfg = PointConfiguration::from_words_unchecked(d, words);
                stats.iter().map(|st| st.evaluate(&cfg)).collect()
            })
            .collect();
        for (j, st) in stats.iter().enumerate() {
            let xs: Vec<f64> = values.iter().map(|v| v[j]).collect();
            rows.push(ExperimentRow::from_samples(n, 0.0, d, st.name(), seed, &xs));
        }
    }
    Ok(rows)
}

pub fn poisson_baseline(n: u64, d: u32, region: &Region, reps: u64, seed: u64) -> Result<ExperimentRow> {
    let rows = poisson_grid(&[Statistic::Count(region.clone())], &[n], d, reps, seed)?;
    Ok(rows.into_iter().next().expect("one row"))
}

/// Least squares of `log variance` on `log n`; non-positive variances are
/// dropped with a warning.
pub fn fit_exponent(points: &[(u64, f64)]) -> Result<LineFit> {
    if points.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 sizes to fit an exponent, got {}",
            points.len()
        )));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &(n, v) in points {
        if v > 0.0 && v.is_finite() && n > 0 {
            xs.push((n as f64).ln());
            ys.push(v.ln());
        } else {
            log::warn!("dropping n={n} with variance {v} from the exponent fit");
        }
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("fewer than two positive variances".into()));
    }
    Ok(least_squares(&xs, &ys))
}

/// Fitted exponent of one statistic with a 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSummary {
    pub stat: String,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Fits every statistic present in `rows`, in first-appearance order.
pub fn summarize(rows: &[ExperimentRow]) -> Result<Vec<ExponentSummary>> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.stat.as_str()) {
            names.push(&r.stat);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let pts: Vec<(u64, f64)> = rows
                .iter()
                .filter(|r| r.stat == name)
                .map(|r| (r.n, r.variance))
                .collect();
            let fit = fit_exponent(&pts)?;
            Ok(ExponentSummary {
                stat: name.to_string(),
                slope: fit.slope,
                slope_se: fit.slope_se,
                intercept: fit.intercept,
                ci_low: fit.slope - 1.96 * fit.slope_se,
                ci_high: fit.slope + 1.96 * fit.slope_se,
            })
        })
        .collect()
}

/// `2^lo, 2^{lo+1}, ..., 2^hi`.
pub fn dyadic_sizes(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|k| 1u64 << k).collect()
}

/// The level-1 cube at the origin corner.
pub fn corner_cube(d: u32) -> Region {
    Region::Cube(DyadicCube::root(d).child(0))
}

/// Ball of radius 0.3 at the centre of the unit cube.
pub fn central_ball(d: u32) -> Region {
    Region::ball(&vec![0.5; d as usize], 0.3).expect("fits inside")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        let cfg = PointConfiguration::from_words(3, vec![1, 2, 3, u64::MAX, 5, 6]).unwrap();
        assert_eq!(count_in_region(&cfg, &Region::Cube(DyadicCube::root(3))), 2);
        assert_eq!(count_in_region(&cfg, &corner_cube(3)), 1);
        let all = Region::axis_box(&[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(count_in_region(&cfg, &all), 2);
        let empty = Region::ball(&[0.5; 3], 0.0).unwrap();
        assert_eq!(count_in_region(&cfg, &empty), 0);
        assert!(Region::ball(&[0.5; 3], 0.5).is_err());
        let b = central_ball(3);
        let centre = vec![1u64 << 63; 3];
        assert!(b.contains(&centre));
        assert!(!b.contains(&[0, 0, 0]));
        assert!((b.volume() - 4.0 / 3.0 * std::f64::consts::PI * 0.027).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_registry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for f in LinearStatistic::registry() {
            assert!(f.empirical_lipschitz(3, 10_000, &mut rng) <= f.lipschitz * 1.01);
        }
    }

    #[test]
    fn fits() {
        let ns = dyadic_sizes(4, 10);
        let exact: Vec<(u64, f64)> = ns.iter().map(|&n| (n, (n as f64).powf(2.0 / 3.0))).collect();
        assert!((fit_exponent(&exact).unwrap().slope - 2.0 / 3.0).abs() < 1e-12);
        let flat: Vec<(u64, f64)> = ns.iter().map(|&n| (n, 3.0)).collect();
        assert!(fit_exponent(&flat).unwrap().slope.abs() < 1e-12);
        let mut with_zero = flat.clone();
        with_zero[0].1 = 0.0;
        assert!(fit_exponent(&with_zero).unwrap().slope.abs() < 1e-12);
        assert!(fit_exponent(&flat[..3]).is_err());
    }

    #[test]
    fn binomial_cell_at_zero_beta() {
        let stats = [Statistic::Count(corner_cube(3)), Statistic::Linear(LinearStatistic::ONE)];
        let rows = run_grid(&stats, &[64], 0.0, 3, 4000, 5).unwrap();
        let p = 0.125;
        let r = &rows[0];
        assert!((r.variance - 64.0 * p * (1.0 - p)).abs() < 4.0 * r.var_se);
        assert!((r.mean - 8.0).abs() < 4.0 * r.mean_se());
        assert_eq!(rows[1].variance, 0.0);
        let b = poisson_baseline(64, 3, &central_ball(3), 4000, 5).unwrap();
        let v = central_ball(3).volume();
        assert!((b.variance - 64.0 * v * (1.0 - v)).abs() < 4.0 * b.var_se);
    }

    #[test]
    fn reproducible() {
        let stats = [Statistic::Linear(LinearStatistic::X1)];
        let a = run_grid(&stats, &[32, 64], 1.0, 3, 200, 9).unwrap();
        let b = run_grid(&stats, &[32, 64], 1.0, 3, 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(rows_to_csv(&a).starts_with(CSV_HEADER));
    }
}
