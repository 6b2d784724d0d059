//! Ground-state energies, canonical and uniformly random minimizers, and
//! exact counting of ground-state occupancy patterns.
//!
//! A tree is a minimizer iff every node splits its count as evenly as
//! possible among its `2^d` children; the energies, the pattern counts and
//! the phase-space weights below all follow from that characterization.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use rand::seq::index;
use rand::Rng;

use crate::numtheory::{gamma_prefix_sum, gamma_unchecked, DimConstant};
use crate::partition::{CountTree, DyadicCube};
use crate::special::{ln_choose, ln_factorial};
use crate::zfun::LogWeight;
use crate::{base_level, check_dim, Error, Result, MAX_LEVEL};

/// Largest ground-state count `count_ground_states` will materialize, in bits.
pub const GROUND_COUNT_BIT_LIMIT: u128 = 1 << 22;

fn overflow(what: &str, n: u64, d: u32) -> Error {
    Error::Overflow(format!("{what} for n={n}, d={d} exceeds 128 bits"))
}

/// `L_n = (C_d+2) n(n-1)/2 - C_d sum_{m<n} gamma(m)`, evaluated over the
/// common denominator `3 * 2^{d-2}` and checked to be integral.
pub fn ground_energy(n: u64, d: u32) -> Result<u128> {
    check_dim(d)?;
    let (num, den) = DimConstant::raw(d);
    let n_i = n as i128;
    let pairs = n_i
        .checked_mul(n_i - 1)
        .map(|p| p / 2)
        .ok_or_else(|| overflow("L_n", n, d))?;
    let lead = pairs
        .checked_mul(num + 2 * den)
        .ok_or_else(|| overflow("L_n", n, d))?;
    let prefix = i128::try_from(gamma_prefix_sum(n, d)).map_err(|_| overflow("L_n", n, d))?;
    let corr = prefix.checked_mul(num).ok_or_else(|| overflow("L_n", n, d))?;
    let scaled = lead - corr;
    assert!(
        scaled % den == 0 && scaled >= 0,
        "L_{n} is not a non-negative integer for d={d}"
    );
    Ok((scaled / den) as u128)
}

/// `D_n = L_{n+1} - L_n = (C_d+2) n - C_d gamma(n)`.
pub fn energy_increment(n: u64, d: u32) -> Result<u128> {
    check_dim(d)?;
    Ok(energy_increment_with(n, d, gamma_unchecked).expect("D_n is a non-negative integer"))
}

/// Closed form for `D_n` with a caller-supplied digit functional; `None`
/// when the result is not a non-negative integer.
pub(crate) fn energy_increment_with(n: u64, d: u32, gamma: fn(u64, u32) -> u64) -> Option<u128> {
    let (num, den) = DimConstant::raw(d);
    let scaled = (num + 2 * den) * n as i128 - num * gamma(n, d) as i128;
    (scaled % den == 0 && scaled >= 0).then(|| (scaled / den) as u128)
}

/// `D_n = 2^{d-2} D_{n / 2^d} + 2 (n - n / 2^d)`.
pub fn energy_increment_recursive(n: u64, d: u32) -> u128 {
    if n == 0 {
        return 0;
    }
    let q = n >> d;
    (energy_increment_recursive(q, d) << (d - 2)) + 2 * (n - q) as u128
}

/// `E_n = D_n - 2n = 2^{d-2} E_{n / 2^d} + (2^{d-1} - 2) (n / 2^d)`.
pub fn excess_increment_recursive(n: u64, d: u32) -> u128 {
    if n == 0 {
        return 0;
    }
    let q = n >> d;
    (excess_increment_recursive(q, d) << (d - 2)) + ((1u128 << (d - 1)) - 2) * q as u128
}

/// `L_0..=L_N` and `D_0..D_N`, built by telescoping the recursive increments
/// and checked against both closed forms at every entry.
#[derive(Debug, Clone)]
pub struct GroundEnergyTable {
    pub d: u32,
    pub energies: Vec<u128>,
    pub increments: Vec<u128>,
}

impl GroundEnergyTable {
    pub fn new(max_n: u64, d: u32) -> Result<Self> {
        check_dim(d)?;
        let mut energies = Vec::with_capacity(max_n as usize + 1);
        let mut increments = Vec::with_capacity(max_n as usize);
        energies.push(0u128);
        for n in 0..max_n {
            let inc = energy_increment_recursive(n, d);
            debug_assert_eq!(Some(inc), energy_increment_with(n, d, gamma_unchecked));
            increments.push(inc);
            let next = energies[n as usize]
                .checked_add(inc)
                .ok_or_else(|| overflow("L_n", n + 1, d))?;
            energies.push(next);
        }
        Ok(Self {
            d,
            energies,
            increments,
        })
    }

    pub fn energy(&self, n: u64) -> u128 {
        self.energies[n as usize]
    }

    pub fn increment(&self, n: u64) -> u128 {
        self.increments[n as usize]
    }
}

#[inline]
fn split(count: u64, d: u32) -> (u64, u64) {
    (count >> d, count & ((1u64 << d) - 1))
}

/// The canonical minimizer: at every node the first `r` children (in child
/// index order) receive `q + 1` points and the rest `q`, where
/// `count = 2^d q + r`.
pub fn min_partition(n: u64, d: u32) -> Result<CountTree> {
    check_dim(d)?;
    let mut nodes = BTreeMap::new();
    let root = DyadicCube::root(d);
    nodes.insert(root.clone(), n);
    let mut stack = vec![(root, n)];
    while let Some((cube, count)) = stack.pop() {
        if count < 2 {
            continue;
        }
        if cube.level() == MAX_LEVEL {
            return Err(Error::DepthExhausted(MAX_LEVEL));
        }
        let (q, r) = split(count, d);
        for i in 0..1usize << d {
            let c = q + u64::from((i as u64) < r);
            if c > 0 {
                let child = cube.child(i);
                nodes.insert(child.clone(), c);
                stack.push((child, c));
            }
        }
    }
    Ok(CountTree::from_map_unchecked(d, nodes))
}

/// Whether every node's `2^d` children counts (absent ones as zero) differ
/// pairwise by at most one. Unresolved trees are never ground states.
pub fn is_ground_state(tree: &CountTree) -> bool {
    tree.is_resolved() && tree.sibling_spread().all(|(lo, hi)| hi - lo <= 1)
}

/// Uniform draw from the ground states of `n` points: each node hands its
/// `r` surplus points to a uniformly random `r`-subset of its children.
pub fn sample_ground_state<R: Rng + ?Sized>(n: u64, d: u32, rng: &mut R) -> Result<CountTree> {
    check_dim(d)?;
    let mut nodes = BTreeMap::new();
    let root = DyadicCube::root(d);
    nodes.insert(root.clone(), n);
    ground_subtree(root, n, rng, &mut |cube, c| {
        nodes.insert(cube, c);
    })?;
    Ok(CountTree::from_map_unchecked(d, nodes))
}

/// Emits every stored descendant of `cube` for a uniformly random ground
/// state of `count` points rooted there.
pub(crate) fn ground_subtree<R: Rng + ?Sized>(
    cube: DyadicCube,
    count: u64,
    rng: &mut R,
    emit: &mut dyn FnMut(DyadicCube, u64),
) -> Result<()> {
    let d = cube.dim();
    let fan = 1usize << d;
    let mut stack = vec![(cube, count)];
    let mut extra = vec![false; fan];
    while let Some((cube, count)) = stack.pop() {
        if count < 2 {
            continue;
        }
        if cube.level() >= MAX_LEVEL {
            return Err(Error::DepthExhausted(MAX_LEVEL));
        }
        let (q, r) = split(count, d);
        extra.iter_mut().for_each(|e| *e = false);
        for i in index::sample(rng, fan, r as usize) {
            extra[i] = true;
        }
        for (i, &e) in extra.iter().enumerate() {
            let c = q + u64::from(e);
            if c > 0 {
                let child = cube.child(i);
                emit(child.clone(), c);
                stack.push((child, c));
            }
        }
    }
    Ok(())
}

/// `b(n, l)`: number of ways to place `n` points into distinct level-`l`
/// cells consistently with a ground state,
/// `b(n,l) = C(2^d, r) b(q+1, l-1)^r b(q, l-1)^{2^d - r}`.
pub fn count_ground_patterns(n: u64, level: u32, d: u32) -> Result<BigUint> {
    check_dim(d)?;
    let required = n as u128 * d as u128 * level as u128;
    if required > GROUND_COUNT_BIT_LIMIT {
        return Err(Error::Budget {
            what: "ground-state count bits",
            required,
            limit: GROUND_COUNT_BIT_LIMIT,
        });
    }
    let mut memo = HashMap::new();
    Ok(patterns(n, level, d, &mut memo))
}

fn patterns(n: u64, level: u32, d: u32, memo: &mut HashMap<(u64, u32), BigUint>) -> BigUint {
    match n {
        0 => return BigUint::from(1u8),
        1 => return BigUint::from(1u8) << (d as usize * level as usize),
        _ if level == 0 => return BigUint::default(),
        _ => {}
    }
    if let Some(v) = memo.get(&(n, level)) {
        return v.clone();
    }
    let fan = 1u64 << d;
    let (q, r) = split(n, d);
    let hi = patterns(q + 1, level - 1, d, memo);
    let lo = patterns(q, level - 1, d, memo);
    let v = binomial(fan, r) * hi.pow(r as u32) * lo.pow((fan - r) as u32);
    memo.insert((n, level), v.clone());
    v
}

fn binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::from(1u8), |acc, i| acc * (n - i) / (i + 1))
}

/// `b_n = b(n, h_n)`, the number of ground-state patterns at the base level.
pub fn count_ground_states(n: u64, d: u32) -> Result<BigUint> {
    count_ground_patterns(n, base_level(n, d), d)
}

/// `log GSW(n) = log(b_n 2^{-n d h_n})` via the level-free recursion
/// `GSW(n) = C(2^d, r) 2^{-nd} GSW(q+1)^r GSW(q)^{2^d-r}`.
pub fn ground_state_weight(n: u64, d: u32) -> Result<LogWeight> {
    check_dim(d)?;
    let mut memo = HashMap::new();
    Ok(LogWeight(log_gsw(n, d, &mut memo)))
}

fn log_gsw(n: u64, d: u32, memo: &mut HashMap<u64, f64>) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if let Some(&v) = memo.get(&n) {
        return v;
    }
    let fan = 1u64 << d;
    let (q, r) = split(n, d);
    let mut v = ln_choose(fan, r) - (n as f64) * d as f64 * std::f64::consts::LN_2;
    if r > 0 {
        v += r as f64 * log_gsw(q + 1, d, memo);
    }
    if q > 1 {
        v += (fan - r) as f64 * log_gsw(q, d, memo);
    }
    memo.insert(n, v);
    v
}

/// `log GSW(m)` for all `m <= max_n`, bottom-up.
pub(crate) fn log_gsw_table(max_n: usize, d: u32) -> Vec<f64> {
    let fan = 1u64 << d;
    let mut t = vec![0.0f64; max_n + 1];
    for m in 2..=max_n {
        let (q, r) = split(m as u64, d);
        let (q, r) = (q as usize, r);
        t[m] = ln_choose(fan, r) - (m as f64) * d as f64 * std::f64::consts::LN_2
            + r as f64 * t[q + 1]
            + (fan - r) as f64 * t[q];
    }
    t
}

/// `log Z(G_n) = -beta L_n + log n! + log GSW(n)`, the weight of the ground
/// states alone.
pub fn log_z_ground(n: u64, beta: f64, d: u32) -> Result<LogWeight> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    let l = ground_energy(n, d)?;
    let energy = if l == 0 { 0.0 } else { -beta * l as f64 };
    Ok(LogWeight(
        energy + ln_factorial(n) + ground_state_weight(n, d)?.ln(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::hamiltonian;
    use crate::stats::chi_square;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn energy_examples() {
        assert_eq!(ground_energy(0, 3).unwrap(), 0);
        assert_eq!(ground_energy(1, 3).unwrap(), 0);
        assert_eq!(ground_energy(2, 3).unwrap(), 2);
        assert_eq!(ground_energy(8, 3).unwrap(), 56);
        assert_eq!(ground_energy(9, 3).unwrap(), 74);
        assert_eq!(energy_increment(0, 3).unwrap(), 0);
        assert_eq!(energy_increment(2, 3).unwrap(), 4);
        assert_eq!(energy_increment(8, 3).unwrap(), 18);
        assert!(ground_energy(5, 2).is_err());
    }

    #[test]
    fn closed_forms_agree_with_recursions() {
        for d in 3..=5 {
            let table = GroundEnergyTable::new(100_000, d).unwrap();
            for n in 0..100_000u64 {
                let inc = energy_increment(n, d).unwrap();
                assert_eq!(inc, table.increment(n));
                assert_eq!(inc - 2 * n as u128, excess_increment_recursive(n, d));
            }
            for n in (0..=100_000u64).step_by(997) {
                assert_eq!(ground_energy(n, d).unwrap(), table.energy(n), "n={n} d={d}");
            }
        }
    }

    #[test]
    fn large_n_energy_fits() {
        let n = 1u64 << 40;
        assert!(ground_energy(n, 3).is_ok());
        assert!(ground_energy(u64::MAX, 16).is_err());
    }

    #[test]
    fn min_partition_is_ground() {
        for d in 3..=4 {
            for n in 0..2000u64 {
                let t = min_partition(n, d).unwrap();
                assert!(is_ground_state(&t));
                assert_eq!(t.n(), n);
                assert_eq!(hamiltonian(&t).unwrap(), ground_energy(n, d).unwrap().into());
            }
        }
        let nine = min_partition(9, 3).unwrap();
        let root = DyadicCube::root(3);
        assert_eq!(nine.children_counts(&root), vec![2, 1, 1, 1, 1, 1, 1, 1]);
        assert_eq!(nine.children_counts(&root.child(0)), vec![1, 1, 0, 0, 0, 0, 0, 0]);
        let full = min_partition(64, 3).unwrap();
        assert_eq!(full.depth(), 2);
        assert_eq!(full.leaves().count(), 64);
    }

    #[test]
    fn non_ground_rejected() {
        let root = DyadicCube::root(3);
        let mut nodes = vec![(root.clone(), 9), (root.child(0), 3)];
        for i in 0..3 {
            nodes.push((root.child(0).child(i), 1));
        }
        for i in 1..7 {
            nodes.push((root.child(i), 1));
        }
        let t = CountTree::from_nodes(3, nodes).unwrap();
        assert!(!is_ground_state(&t));
        assert!(!is_ground_state(&CountTree::single_root(3, 2).unwrap()));
    }

    #[test]
    fn counting_examples() {
        assert_eq!(count_ground_states(2, 3).unwrap(), 28u32.into());
        assert_eq!(count_ground_states(9, 3).unwrap(), 469_762_048u64.into());
        assert_eq!(count_ground_states(64, 3).unwrap(), 1u32.into());
        assert_eq!(count_ground_states(1, 3).unwrap(), 1u32.into());
        assert!(matches!(
            count_ground_states(1 << 30, 3),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn gsw_examples() {
        assert_eq!(ground_state_weight(1, 3).unwrap().ln(), 0.0);
        let g2 = ground_state_weight(2, 3).unwrap().ln();
        assert!((g2 - (7.0f64 / 16.0).ln()).abs() < 1e-14);
        let ratio = ground_state_weight(9, 3).unwrap().ln() - ground_state_weight(8, 3).unwrap().ln();
        assert!((ratio - (7.0f64 / 16.0).ln()).abs() < 1e-13);
        // exact: b_9 2^{-54} / (b_8 2^{-24}) = 7/16
        let b9 = count_ground_states(9, 3).unwrap();
        let b8 = count_ground_states(8, 3).unwrap();
        assert_eq!(b9 * 16u32, b8 * 7u32 << 30);
    }

    #[test]
    fn gsw_matches_big_counts() {
        let table = log_gsw_table(3000, 3);
        for n in [2u64, 3, 7, 9, 17, 100, 513, 2999] {
            let h = base_level(n, 3);
            let b = count_ground_states(n, 3).unwrap();
            let exact = crate::special::ln_biguint(&b)
                - (n * 3 * h as u64) as f64 * std::f64::consts::LN_2;
            let rec = ground_state_weight(n, 3).unwrap().ln();
            assert!((exact - rec).abs() < 1e-9 * rec.abs().max(1.0), "n={n}");
            assert!((table[n as usize] - rec).abs() < 1e-9 * rec.abs().max(1.0));
        }
    }

    #[test]
    fn gsw_ratio_bracket_and_volume_bound() {
        for d in 3..=4 {
            let t = log_gsw_table(100_001, d);
            let c = 2.0 * d as f64 * std::f64::consts::LN_2;
            for n in 0..100_000usize {
                assert!((t[n + 1] - t[n]).abs() <= c * ((n + 2) as f64).ln(), "n={n}");
            }
            for n in 0..=10_000u64 {
                assert!(ln_factorial(n) + t[n as usize] <= 1e-9, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn log_z_ground_examples() {
        assert_eq!(log_z_ground(0, 1.0, 3).unwrap().ln(), 0.0);
        assert_eq!(log_z_ground(1, 3.0, 3).unwrap().ln(), 0.0);
        let v = log_z_ground(2, 1.0, 3).unwrap().ln();
        assert!((v - (-2.0 + 2f64.ln() + (7.0f64 / 16.0).ln())).abs() < 1e-14);
        assert!(log_z_ground(2, -1.0, 3).is_err());
    }

    #[test]
    fn ground_sampler_uniform_for_two_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = vec![0u64; 64];
        for _ in 0..20_000 {
            let t = sample_ground_state(2, 3, &mut rng).unwrap();
            assert!(is_ground_state(&t));
            let kids = t.children_counts(&DyadicCube::root(3));
            let idx: Vec<usize> = (0..8).filter(|&i| kids[i] == 1).collect();
            counts[idx[0] * 8 + idx[1]] += 1;
        }
        let (obs, probs): (Vec<u64>, Vec<f64>) = (0..64)
            .filter(|k| k / 8 < k % 8)
            .map(|k| (counts[k], 1.0 / 28.0))
            .unzip();
        assert_eq!(obs.iter().sum::<u64>(), 20_000);
        assert!(chi_square(&obs, &probs, 5.0).p_value > 1e-3);
    }

    #[test]
    fn ground_sampler_balanced_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = sample_ground_state(64, 3, &mut rng).unwrap();
        assert_eq!(t, min_partition(64, 3).unwrap());
        for n in [3u64, 9, 100, 700] {
            assert!(is_ground_state(&sample_ground_state(n, 3, &mut rng).unwrap()));
        }
    }

    #[test]
    fn energy_remark_bounded() {
        for d in 3..=5u32 {
            let table = GroundEnergyTable::new(1_000_000, d).unwrap();
            let c = DimConstant::new(d).unwrap().as_f64();
            let expo = (2.0 * d as f64 - 2.0) / d as f64;
            for n in (2..=1_000_000u64).step_by(37) {
                let x = n as f64;
                let v = (table.energy(n) as f64 - (c + 2.0) * x * x / 2.0) / x.powf(expo);
                assert!(v.abs() <= 10.0, "n={n} d={d} v={v}");
            }
        }
    }
}
