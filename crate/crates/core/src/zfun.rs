//! Log-domain partition functions by dynamic programming over the dyadic
//! tree.
//!
//! Splitting the root into its `2^d` children,
//!
//! ```text
//! Z(m, b) = m! e^{-b m^2} sum_{n_1+..+n_B = m} prod_i e^{b n_i^2} Z(n_i, 2^{d-2} b) 2^{-d n_i} / n_i!
//! ```
//!
//! so one level of the tree is a `B = 2^d`-fold convolution power of
//! `f_k(j) = e^{b_k j^2} Z(j, b_{k+1}) 2^{-dj} / j!` with `b_k = 2^{(d-2)k} b`.
//!
//! Raw logs of these quantities reach `b_k m^2`, far beyond the precision
//! needed for differences of order one, so every table stores values
//! relative to the ground-state contribution. With `L_m` the ground energy,
//! `eps(m) = m^2 - 2^{d-2} L_m` and `E_t(s)` the largest `sum eps(n_i)` over
//! splits of `s` into `t` parts (attained by the balanced split),
//!
//! ```text
//! log f_k(j)     = b_k eps(j)  + psi_k(j),      psi_k(j) = log GSW(j) - dj ln 2 + R_{k+1}(j)
//! log g_{k,t}(s) = b_k E_t(s)  + Psi_{k,t}(s)
//! R_k(m)         = log Z(m, b_k) - log Z_ground(m, b_k) = Psi_{k,B}(m) - log GSW(m)
//! ```
//!
//! The energy offsets are exact integers, so in each convolution step the
//! exponent `b_k (eps(j) + E_{t-1}(s-j) - E_t(s))` is formed from an exact
//! non-positive integer and never cancels large floating-point values. Below
//! the truncation depth `K` the excess `R_{K+1}` is taken to be zero, i.e.
//! `Z(m, b_{K+1})` is replaced by its ground-state part, a lower bound.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::groundstate::{log_gsw_table, GroundEnergyTable};
use crate::special::ln_factorial;
use crate::{base_level, check_dim, Error, Result, MAX_LEVEL};

/// Logarithm of a non-negative quantity; `-inf` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
pub struct LogWeight(pub f64);

impl LogWeight {
    pub const ZERO: Self = Self(f64::NEG_INFINITY);
    pub const ONE: Self = Self(0.0);

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn add(self, other: Self) -> Self {
        Self(crate::special::log_add_exp(self.0, other.0))
    }

    pub fn mul(self, other: Self) -> Self {
        Self(self.0 + other.0)
    }
}

impl fmt::Display for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Largest table allocation `build_tables` accepts, in bytes.
pub const TABLE_BYTE_LIMIT: u128 = 4 << 30;

/// Default extra levels below the base level of the largest count.
pub const DEFAULT_DEPTH_PAD: u32 = 4;

const CACHE_MAGIC: &[u8; 4] = b"HCGT";
const CACHE_VERSION: u32 = 1;

/// Below this many table entries per row a build stays on one thread.
const PARALLEL_MIN_N: usize = 256;

/// Per-level convolution tables shared by partition-function evaluation and
/// the exact sampler.
#[derive(Debug, Clone)]
pub struct LevelTables {
    d: u32,
    beta: f64,
    n: usize,
    depth: u32,
    depth_pad: u32,
    energies: GroundEnergyTable,
    eps: Vec<f64>,
    /// `balanced[t-1][s] = E_t(s)`.
    balanced: Vec<Vec<f64>>,
    /// `psi[k][t-1][s] = Psi_{k,t}(s)`; `psi[k][0]` is `psi_k`.
    psi: Vec<Vec<Vec<f64>>>,
    gsw: Vec<f64>,
    /// `excess[k][m] = R_k(m)` for `k <= K + 1`.
    excess: Vec<Vec<f64>>,
}

/// Bytes needed for tables at `(n, d, depth)`.
pub fn table_bytes(n: u64, d: u32, depth: u32) -> u128 {
    let fan = 1u128 << d;
    let row = n as u128 + 1;
    8 * row * (fan * (depth as u128 + 2) + depth as u128 + 4)
}

/// Depth used for a build at `(n, depth_pad)`.
pub fn table_depth(n: u64, d: u32, depth_pad: u32) -> u32 {
    base_level(n.max(2), d) + depth_pad
}

/// Builds the tables for all counts `m <= n` at every level down to
/// `K = base_level(max(n, 2)) + depth_pad`.
pub fn build_tables(n: u64, beta: f64, d: u32, depth_pad: u32) -> Result<LevelTables> {
    check_dim(d)?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    let depth = table_depth(n, d, depth_pad);
    if depth >= MAX_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "truncation depth {depth} leaves no fixed-point resolution below it"
        )));
    }
    let required = table_bytes(n, d, depth);
    if required > TABLE_BYTE_LIMIT {
        return Err(Error::Budget {
            what: "level table bytes",
            required,
            limit: TABLE_BYTE_LIMIT,
        });
    }
    let n_us = n as usize;
    let fan = 1usize << d;
    let energies = GroundEnergyTable::new(n, d)?;
    let scale = (1u128 << (d - 2)) as f64;
    let eps: Vec<f64> = (0..=n_us)
        .map(|m| (m * m) as f64 - scale * energies.energy(m as u64) as f64)
        .collect();
    let balanced: Vec<Vec<f64>> = (1..=fan).map(|t| balanced_row(&eps, t)).collect();
    let gsw = log_gsw_table(n_us, d);

    let mut excess = vec![vec![0.0; n_us + 1]; depth as usize + 2];
    excess[depth as usize + 1] = seed_excess(beta, &gsw);
    let mut psi = Vec::with_capacity(depth as usize + 1);
    let ln2d = d as f64 * std::f64::consts::LN_2;
    for k in (0..=depth).rev() {
        let beta_k = level_beta(beta, d, k);
        let below = &excess[k as usize + 1];
        let base: Vec<f64> = (0..=n_us)
            .map(|m| gsw[m] - m as f64 * ln2d + below[m])
            .collect();
        let mut level = Vec::with_capacity(fan);
        level.push(base);
        for t in 2..=fan {
            let next = convolve(
                beta_k,
                &eps,
                &level[0],
                &balanced[t - 2],
                &level[t - 2],
                &balanced[t - 1],
            );
            level.push(next);
        }
        excess[k as usize] = level[fan - 1]
            .iter()
            .zip(&gsw)
            .map(|(p, g)| p - g)
            .collect();
        psi.push(level);
    }
    psi.reverse();
    Ok(LevelTables {
        d,
        beta,
        n: n_us,
        depth,
        depth_pad,
        energies,
        eps,
        balanced,
        psi,
        gsw,
        excess,
    })
}

/// `R_{K+1}`: zero (ground-state seed), except at `beta = 0` where
/// `Z(m, 0) = 1` is known exactly.
fn seed_excess(beta: f64, gsw: &[f64]) -> Vec<f64> {
    if beta == 0.0 {
        gsw.iter()
            .enumerate()
            .map(|(m, g)| -ln_factorial(m as u64) - g)
            .collect()
    } else {
        vec![0.0; gsw.len()]
    }
}

/// `b_k = 2^{(d-2)k} b`, saturating at `f64::MAX` so that `b_k * 0 = 0`.
pub(crate) fn level_beta(beta: f64, d: u32, k: u32) -> f64 {
    let v = beta * 2f64.powi(((d - 2) * k) as i32);
    if v.is_finite() {
        v
    } else {
        f64::MAX
    }
}

fn balanced_row(eps: &[f64], t: usize) -> Vec<f64> {
    (0..eps.len())
        .map(|s| {
            let (q, r) = (s / t, s % t);
            let hi = if r > 0 { r as f64 * eps[q + 1] } else { 0.0 };
            hi + (t - r) as f64 * eps[q]
        })
        .collect()
}

/// `out(s) = LSE_j [b (ea(j) + eb(s-j) - eout(s)) + pa(j) + pb(s-j)]`.
pub(crate) fn convolve(
    beta: f64,
    ea: &[f64],
    pa: &[f64],
    eb: &[f64],
    pb: &[f64],
    eout: &[f64],
) -> Vec<f64> {
    let n = ea.len() - 1;
    let ebr: Vec<f64> = eb.iter().rev().copied().collect();
    let pbr: Vec<f64> = pb.iter().rev().copied().collect();
    let row = |s: usize| {
        let lo = n - s;
        convolve_row(
            beta,
            &ea[..=s],
            &pa[..=s],
            &ebr[lo..],
            &pbr[lo..],
            eout[s],
        )
    };
    if n + 1 >= PARALLEL_MIN_N {
        (0..n + 1).into_par_iter().with_min_len(32).map(row).collect()
    } else {
        (0..=n).map(row).collect()
    }
}

/// Terms further than this below the maximum are dropped; `e^{-60}` is below
/// double precision relative to the leading term.
const LSE_CUTOFF: f64 = 60.0;

#[inline]
fn convolve_row(beta: f64, ea: &[f64], pa: &[f64], ebr: &[f64], pbr: &[f64], e: f64) -> f64 {
    let term = |((&a, &p), (&b, &q)): ((&f64, &f64), (&f64, &f64))| {
        beta * (a + b - e) + p + q
    };
    let it = || ea.iter().zip(pa).zip(ebr.iter().zip(pbr));
    let max = it().map(term).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let cut = max - LSE_CUTOFF;
    let sum: f64 = it()
        .map(term)
        .map(|x| if x > cut { (x - max).exp() } else { 0.0 })
        .sum();
    max + sum.ln()
}

impl LevelTables {
    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Largest count covered.
    pub fn n(&self) -> u64 {
        self.n as u64
    }

    /// Truncation depth `K`: the deepest level with a table.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn depth_pad(&self) -> u32 {
        self.depth_pad
    }

    pub fn fan(&self) -> usize {
        1 << self.d
    }

    pub fn beta_at(&self, k: u32) -> f64 {
        level_beta(self.beta, self.d, k)
    }

    /// `R_k(m) = log Z(m, b_k) - log Z_ground(m, b_k)`, for `k <= K + 1`.
    pub fn excess(&self, m: u64, k: u32) -> f64 {
        self.excess[k as usize][m as usize]
    }

    pub fn excess_row(&self, k: u32) -> &[f64] {
        &self.excess[k as usize]
    }

    /// `log GSW(m)`.
    pub fn log_gsw(&self, m: u64) -> f64 {
        self.gsw[m as usize]
    }

    pub fn ground_energy(&self, m: u64) -> u128 {
        self.energies.energy(m)
    }

    pub fn energy_increment(&self, m: u64) -> u128 {
        self.energies.increment(m)
    }

    /// `log Z(m, b_k)` for `m <= n`, `k <= K + 1`.
    pub fn log_z(&self, m: u64, k: u32) -> LogWeight {
        // at beta = 0 the integrand is 1 on the unit cube
        if m <= 1 || self.beta == 0.0 {
            return LogWeight::ONE;
        }
        let l = self.energies.energy(m);
        let energy = if l == 0 { 0.0 } else { -self.beta_at(k) * l as f64 };
        LogWeight(energy + ln_factorial(m) + self.gsw[m as usize] + self.excess(m, k))
    }

    /// `log f_k(j)`.
    pub fn log_f(&self, k: u32, j: u64) -> LogWeight {
        self.log_g(k, 1, j)
    }

    /// `log g_{k,t}(s)`, the `t`-fold convolution power of `f_k`.
    pub fn log_g(&self, k: u32, t: usize, s: u64) -> LogWeight {
        let e = self.balanced[t - 1][s as usize];
        let energy = if e == 0.0 { 0.0 } else { self.beta_at(k) * e };
        LogWeight(energy + self.psi[k as usize][t - 1][s as usize])
    }

    #[inline]
    pub(crate) fn eps(&self) -> &[f64] {
        &self.eps
    }

    #[inline]
    pub(crate) fn balanced(&self, t: usize) -> &[f64] {
        &self.balanced[t - 1]
    }

    #[inline]
    pub(crate) fn psi(&self, k: u32, t: usize) -> &[f64] {
        &self.psi[k as usize][t - 1]
    }

    /// Log-probability of the ordered children counts `comp` under a parent
    /// holding `sum(comp)` points at level `k`.
    pub fn composition_log_prob(&self, k: u32, comp: &[u64]) -> f64 {
        assert_eq!(comp.len(), self.fan());
        let m: u64 = comp.iter().sum();
        let fan = self.fan();
        let delta: f64 = comp.iter().map(|&j| self.eps[j as usize]).sum::<f64>()
            - self.balanced[fan - 1][m as usize];
        let energy = if delta == 0.0 { 0.0 } else { self.beta_at(k) * delta };
        let psi = &self.psi[k as usize];
        energy + comp.iter().map(|&j| psi[0][j as usize]).sum::<f64>() - psi[fan - 1][m as usize]
    }

    /// Recomputes `Psi_{k,B}` by repeated squaring `f, f^2, f^4, ...` instead
    /// of the chained products stored in the tables.
    pub fn top_level_by_squaring(&self, k: u32) -> Vec<f64> {
        let mut power = self.psi[k as usize][0].clone();
        let beta_k = self.beta_at(k);
        for i in 0..self.d as usize {
            let t = 1usize << i;
            power = convolve(
                beta_k,
                &self.balanced[t - 1],
                &power,
                &self.balanced[t - 1],
                &power,
                &self.balanced[2 * t - 1],
            );
        }
        power
    }

    /// Writes the tables in a little-endian binary format keyed by
    /// `(n, beta, d, K)`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&self.beta.to_bits().to_le_bytes())?;
        w.write_all(&self.d.to_le_bytes())?;
        w.write_all(&self.depth.to_le_bytes())?;
        w.write_all(&self.depth_pad.to_le_bytes())?;
        for level in &self.psi {
            for row in level {
                for v in row {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads tables written by [`LevelTables::save`]; `key`, when given, must
    /// match `(n, beta, d, depth_pad)` exactly.
    pub fn load(path: &Path, key: Option<(u64, f64, u32, u32)>) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Parse("not a level-table cache".into()));
        }
        let version = read_u32(&mut r)?;
        if version != CACHE_VERSION {
            return Err(Error::Parse(format!("unsupported cache version {version}")));
        }
        let n = read_u64(&mut r)?;
        let beta = f64::from_bits(read_u64(&mut r)?);
        let d = read_u32(&mut r)?;
        let depth = read_u32(&mut r)?;
        let depth_pad = read_u32(&mut r)?;
        check_dim(d)?;
        if let Some((kn, kb, kd, kp)) = key {
            if (kn, kb.to_bits(), kd, kp) != (n, beta.to_bits(), d, depth_pad) {
                return Err(Error::Parse("cache key mismatch".into()));
            }
        }
        if depth != table_depth(n, d, depth_pad) || table_bytes(n, d, depth) > TABLE_BYTE_LIMIT {
            return Err(Error::Parse("inconsistent cache header".into()));
        }
        let n_us = n as usize;
        let fan = 1usize << d;
        let mut psi = Vec::with_capacity(depth as usize + 1);
        for _ in 0..=depth {
            let mut level = Vec::with_capacity(fan);
            for _ in 0..fan {
                let mut row = Vec::with_capacity(n_us + 1);
                for _ in 0..=n_us {
                    row.push(f64::from_bits(read_u64(&mut r)?));
                }
                level.push(row);
            }
            psi.push(level);
        }
        let energies = GroundEnergyTable::new(n, d)?;
        let scale = (1u128 << (d - 2)) as f64;
        let eps: Vec<f64> = (0..=n_us)
            .map(|m| (m * m) as f64 - scale * energies.energy(m as u64) as f64)
            .collect();
        let balanced: Vec<Vec<f64>> = (1..=fan).map(|t| balanced_row(&eps, t)).collect();
        let gsw = log_gsw_table(n_us, d);
        let mut excess: Vec<Vec<f64>> = psi
            .iter()
            .map(|level: &Vec<Vec<f64>>| level[fan - 1].iter().zip(&gsw).map(|(p, g)| p - g).collect())
            .collect();
        excess.push(seed_excess(beta, &gsw));
        Ok(Self {
            d,
            beta,
            n: n_us,
            depth,
            depth_pad,
            energies,
            eps,
            balanced,
            psi,
            gsw,
            excess,
        })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// A partition-function value stabilized under deepening truncation.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Converged {
    pub log_z: LogWeight,
    /// `|log Z(pad) - log Z(pad / 2)|` at the accepted pad.
    pub delta: f64,
    pub depth_pad: u32,
    pub depth: u32,
}

/// Builds tables with `depth_pad = 4, 8, 16, ...` until successive values of
/// `log Z(n, beta)` agree to `tol * max(1, |log Z|)`.
pub fn log_partition(n: u64, beta: f64, d: u32, tol: f64) -> Result<Converged> {
    converge(n, beta, d, tol, |t| vec![t.excess(n, 0)]).map(|(c, t)| Converged {
        log_z: t.log_z(n, 0),
        ..c
    })
}

/// Deepens the truncation until every value returned by `probe` (excess
/// log-weights, compared in absolute terms scaled by `max(1, |log Z|)`) is
/// stable. Returns the accepted tables.
pub fn converge<F>(n: u64, beta: f64, d: u32, tol: f64, probe: F) -> Result<(Converged, LevelTables)>
where
    F: Fn(&LevelTables) -> Vec<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let mut pad = DEFAULT_DEPTH_PAD;
    let mut prev = build_tables(n, beta, d, pad)?;
    loop {
        let next_pad = pad * 2;
        let depth = table_depth(n, d, next_pad);
        if depth >= MAX_LEVEL {
            let delta = f64::NAN;
            return Err(Error::NoConvergence { depth, delta });
        }
        let next = build_tables(n, beta, d, next_pad)?;
        let scale = next.log_z(n, 0).ln().abs().max(1.0);
        let delta = probe(&prev)
            .iter()
            .zip(probe(&next))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if delta <= tol * scale {
            let c = Converged {
                log_z: next.log_z(n, 0),
                delta,
                depth_pad: next_pad,
                depth: next.depth,
            };
            return Ok((c, next));
        }
        prev = next;
        pad = next_pad;
    }
}

/// `log Z(n+1) / Z(n)` together with the residual `ratio + beta D_n`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Ratio {
    pub ratio: f64,
    pub residual: f64,
}

/// Ratio of consecutive partition functions from one table build.
pub fn log_partition_ratio(n: u64, beta: f64, d: u32) -> Result<Ratio> {
    if n < 2 {
        return Err(Error::InvalidArgument("ratio needs n >= 2".into()));
    }
    let tables = build_tables(n + 1, beta, d, DEFAULT_DEPTH_PAD * 2)?;
    Ok(tables.ratio(n))
}

impl LevelTables {
    /// Ratio for `n + 1 <= self.n()` at level 0. The residual is assembled
    /// from the excess and entropy terms only, so the energy `beta D_n`
    /// cancels exactly.
    pub fn ratio(&self, n: u64) -> Ratio {
        let residual = self.excess(n + 1, 0) - self.excess(n, 0)
            + ((n + 1) as f64).ln()
            + self.log_gsw(n + 1)
            - self.log_gsw(n);
        let dn = self.energy_increment(n);
        let energy = if dn == 0 { 0.0 } else { self.beta * dn as f64 };
        Ratio {
            ratio: residual - energy,
            residual,
        }
    }
}

/// `log sum_{k>=1} (1 - 2^{-d}) 2^{-d(k-1)} exp(-2 b 2^{(d-2)(k-1)})`: two
/// points separate at level `k` with probability `(1-2^{-d}) 2^{-d(k-1)}`.
pub fn two_point_series(beta: f64, d: u32) -> f64 {
    let p = 1.0 - 2f64.powi(-(d as i32));
    let terms: Vec<f64> = (1..=64)
        .map(|k| {
            let j = (k - 1) as f64;
            p.ln() - d as f64 * j * std::f64::consts::LN_2
                - 2.0 * beta * 2f64.powf((d - 2) as f64 * j)
        })
        .collect();
    crate::special::log_sum_exp(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::log_z_ground;

    #[test]
    fn trivial_values() {
        let t = build_tables(5, 1.0, 3, 4).unwrap();
        for k in 0..=t.depth() {
            assert_eq!(t.log_z(0, k).ln(), 0.0);
            assert!(t.log_z(1, k).ln().abs() < 1e-14, "k={k}");
        }
        let zero = build_tables(40, 0.0, 3, 4).unwrap();
        for m in 0..=40 {
            assert!(zero.log_z(m, 0).ln().abs() < 1e-11, "m={m} {}", zero.log_z(m, 0));
        }
        assert!(build_tables(5, -1.0, 3, 4).is_err());
        assert!(build_tables(5, 1.0, 2, 4).is_err());
    }

    #[test]
    fn two_point_series_matches() {
        for d in 3..=5 {
            for beta in [0.1, 1.0, 3.0] {
                let t = build_tables(2, beta, d, 8).unwrap();
                let v = t.log_z(2, 0).ln();
                assert!((v - two_point_series(beta, d)).abs() < 1e-12, "d={d} beta={beta}");
            }
        }
    }

    #[test]
    fn brackets_small() {
        for d in 3..=4 {
            for beta in [0.25, 1.0, 4.0] {
                let t = build_tables(64, beta, d, 6).unwrap();
                for m in 0..=64u64 {
                    let z = t.log_z(m, 0).ln();
                    let lo = log_z_ground(m, beta, d).unwrap().ln();
                    let up = -beta * t.ground_energy(m) as f64;
                    assert!(z >= lo - 1e-9 && z <= up + 1e-9, "m={m} d={d} b={beta}");
                }
            }
        }
    }

    #[test]
    fn squaring_matches_chain() {
        for (d, beta) in [(3, 0.7), (4, 2.0), (3, 0.0)] {
            let t = build_tables(60, beta, d, 3).unwrap();
            for k in [0, 1, t.depth()] {
                let sq = t.top_level_by_squaring(k);
                let chain = t.psi(k, t.fan());
                for (a, b) in sq.iter().zip(chain) {
                    assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn deeper_truncation_never_decreases() {
        let mut last = vec![f64::NEG_INFINITY; 101];
        for pad in 0..6 {
            let t = build_tables(100, 0.5, 3, pad).unwrap();
            for m in 0..=100u64 {
                let v = t.excess(m, 0);
                assert!(v >= last[m as usize] - 1e-12, "pad={pad} m={m}");
                last[m as usize] = v;
            }
        }
    }

    #[test]
    fn level_tables_match_fresh_builds() {
        let beta = 0.3;
        let t = build_tables(200, beta, 3, 8).unwrap();
        for k in [1u32, 2, 3] {
            let fresh = build_tables(200, t.beta_at(k), 3, 8).unwrap();
            for m in [2u64, 7, 50, 199] {
                assert!((t.excess(m, k) - fresh.excess(m, 0)).abs() < 1e-9, "k={k} m={m}");
            }
        }
    }

    #[test]
    fn composition_probabilities_sum_to_one() {
        let t = build_tables(4, 1.0, 3, 6).unwrap();
        for m in 0..=4u64 {
            let mut total = 0.0;
            let mut comp = vec![0u64; 8];
            compositions(m, 0, &mut comp, &mut |c| total += t.composition_log_prob(0, c).exp());
            assert!((total - 1.0).abs() < 1e-12, "m={m} total={total}");
        }
    }

    fn compositions(left: u64, i: usize, comp: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
        if i == comp.len() - 1 {
            comp[i] = left;
            f(comp);
            return;
        }
        for j in 0..=left {
            comp[i] = j;
            compositions(left - j, i + 1, comp, f);
        }
    }

    #[test]
    fn converge_and_ratio() {
        assert_eq!(log_partition(1, 2.0, 3, 1e-10).unwrap().log_z.ln(), 0.0);
        assert!(log_partition(9, 0.0, 3, 1e-10).unwrap().log_z.ln().abs() < 1e-12);
        let c = log_partition(9, 1.0, 3, 1e-10).unwrap();
        let z = c.log_z.ln();
        assert!(z >= log_z_ground(9, 1.0, 3).unwrap().ln() - 1e-9 && z <= -74.0 + 1e-9);
        let r = log_partition_ratio(2, 0.0, 3).unwrap();
        assert!(r.ratio.abs() < 1e-12);
        let r = log_partition_ratio(2, 1.0, 3).unwrap();
        let z3 = log_partition(3, 1.0, 3, 1e-12).unwrap().log_z.ln();
        let z2 = log_partition(2, 1.0, 3, 1e-12).unwrap().log_z.ln();
        assert!((r.ratio - (z3 - z2)).abs() < 1e-10);
        assert!((r.residual - (r.ratio + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn cache_round_trip() {
        let t = build_tables(30, 0.8, 3, 3).unwrap();
        let dir = std::env::temp_dir().join(format!("hcgt-test-{}", std::process::id()));
        t.save(&dir).unwrap();
        let back = LevelTables::load(&dir, Some((30, 0.8, 3, 3))).unwrap();
        assert!(LevelTables::load(&dir, Some((30, 0.9, 3, 3))).is_err());
        std::fs::remove_file(&dir).unwrap();
        for k in 0..=t.depth() {
            for t_ in 1..=8 {
                assert_eq!(t.psi(k, t_), back.psi(k, t_));
            }
            assert_eq!(t.excess_row(k), back.excess_row(k));
        }
    }

    #[test]
    fn budget_reported() {
        assert!(matches!(
            build_tables(1 << 20, 1.0, 16, 4),
            Err(Error::Budget { .. })
        ));
    }
}
