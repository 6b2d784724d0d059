//! Brute-force ground truth for small systems.
//!
//! Nothing here uses the closed forms, the dynamic program or the
//! level-decomposition Hamiltonian: energies are summed pair by pair over
//! leaf paths, and trees are enumerated either labeled (every occupancy
//! tree) or up to permutation of siblings (canonical shapes carrying the
//! number of labeled trees they stand for).

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::partition::{hamiltonian, perm_distance_sq, CountTree, DyadicCube};
use crate::special::{ln_choose, ln_factorial, log_sum_exp};
use crate::{base_level, check_dim, Error, Result};

/// Most trees or shapes any enumeration here will materialize.
pub const ENUMERATION_LIMIT: u128 = 4_000_000;

fn budget(what: &'static str, required: u128) -> Result<()> {
    if required > ENUMERATION_LIMIT {
        Err(Error::Budget {
            what,
            required,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Number of labeled occupancy trees of `n` points with depth at most
/// `depth`: `T(m, k) = [x^m] (sum_j T(j, k-1) x^j)^{2^d}`, `T(0|1, k) = 1`.
pub fn count_trees(n: u64, d: u32, depth: u32) -> u128 {
    let n = n as usize;
    let mut t = vec![0u128; n + 1];
    t[0] = 1;
    if n >= 1 {
        t[1] = 1;
    }
    for _ in 0..depth {
        let mut power = vec![0u128; n + 1];
        power[0] = 1;
        for _ in 0..1u32 << d {
            let mut next = vec![0u128; n + 1];
            for (i, &a) in power.iter().enumerate().filter(|(_, &a)| a > 0) {
                for (j, &b) in t.iter().enumerate().take(n + 1 - i) {
                    next[i + j] = next[i + j].saturating_add(a.saturating_mul(b));
                }
            }
            power = next;
        }
        power[0] = 1;
        if n >= 1 {
            power[1] = 1;
        }
        t = power;
    }
    t[n]
}

/// Every resolved occupancy tree of `n` points with depth at most
/// `max_depth`, children compositions in lexicographic order.
pub fn enumerate_trees(n: u64, d: u32, max_depth: u32) -> Result<Vec<CountTree>> {
    check_dim(d)?;
    budget("labeled trees", count_trees(n, d, max_depth))?;
    let root = DyadicCube::root(d);
    let subtrees = labeled_subtrees(&root, n, max_depth);
    Ok(subtrees
        .into_iter()
        .map(|nodes| {
            let mut map: BTreeMap<DyadicCube, u64> = nodes.into_iter().collect();
            map.insert(root.clone(), n);
            CountTree::from_map_unchecked(d, map)
        })
        .collect())
}

/// Node lists below `cube` (excluding it) for every way to resolve `count`
/// points within `depth` further levels.
fn labeled_subtrees(cube: &DyadicCube, count: u64, depth: u32) -> Vec<Vec<(DyadicCube, u64)>> {
    if count <= 1 {
        return vec![Vec::new()];
    }
    if depth == 0 {
        return Vec::new();
    }
    let fan = 1usize << cube.dim();
    let mut out = Vec::new();
    let mut comp = vec![0u64; fan];
    for_each_composition(count, &mut comp, 0, &mut |comp| {
        let mut partial: Vec<Vec<(DyadicCube, u64)>> = vec![Vec::new()];
        for (i, &c) in comp.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let child = cube.child(i);
            let below = labeled_subtrees(&child, c, depth - 1);
            let mut next = Vec::with_capacity(partial.len() * below.len());
            for p in &partial {
                for b in &below {
                    let mut v = p.clone();
                    v.push((child.clone(), c));
                    v.extend(b.iter().cloned());
                    next.push(v);
                }
            }
            partial = next;
            if partial.is_empty() {
                break;
            }
        }
        out.extend(partial);
    });
    out
}

/// Calls `f` on every composition of `total` into `comp.len()` ordered parts,
/// lexicographically decreasing in the first part.
fn for_each_composition(total: u64, comp: &mut [u64], i: usize, f: &mut dyn FnMut(&[u64])) {
    if i + 1 == comp.len() {
        comp[i] = total;
        f(comp);
        return;
    }
    for j in (0..=total).rev() {
        comp[i] = j;
        for_each_composition(total - j, comp, i + 1, f);
    }
}

/// A tree up to permutation of siblings.
#[derive(Debug, Clone)]
struct ShapeInfo {
    count: u64,
    /// Child shape ids in the canonical (pool) order.
    children: Vec<usize>,
    /// Labeled trees represented.
    orbit: u128,
    /// Sum over points of the level of the leaf holding them.
    leaf_levels: u64,
}

/// Canonical shapes, memoized by `(count, depth)`.
pub struct ShapeArena {
    d: u32,
    shapes: Vec<ShapeInfo>,
    memo: HashMap<(u64, u32), Vec<usize>>,
}

impl ShapeArena {
    pub fn new(d: u32) -> Result<Self> {
        check_dim(d)?;
        let leaf = ShapeInfo {
            count: 1,
            children: Vec::new(),
            orbit: 1,
            leaf_levels: 0,
        };
        Ok(Self {
            d,
            shapes: vec![leaf],
            memo: HashMap::new(),
        })
    }

    /// Ids of all shapes of `count >= 1` points with depth at most `depth`.
    pub fn shapes(&mut self, count: u64, depth: u32) -> Result<Vec<usize>> {
        if count == 1 {
            return Ok(vec![0]);
        }
        if count == 0 || depth == 0 {
            return Ok(Vec::new());
        }
        if let Some(v) = self.memo.get(&(count, depth)) {
            return Ok(v.clone());
        }
        // pool: all child shapes, larger counts first
        let mut pool = Vec::new();
        for c in (1..=count).rev() {
            pool.extend(self.shapes(c, depth - 1)?);
        }
        let fan = 1usize << self.d;
        let mut picks = Vec::new();
        let mut found = Vec::new();
        self.multisets(&pool, 0, count, fan, &mut picks, &mut found);
        let mut ids = Vec::with_capacity(found.len());
        for children in found {
            let info = self.describe(count, children);
            self.shapes.push(info);
            ids.push(self.shapes.len() - 1);
        }
        budget("canonical shapes", self.shapes.len() as u128)?;
        self.memo.insert((count, depth), ids.clone());
        Ok(ids)
    }

    fn multisets(
        &self,
        pool: &[usize],
        from: usize,
        left: u64,
        slots: usize,
        picks: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
    ) {
        if left == 0 {
            found.push(picks.clone());
            return;
        }
        if slots == 0 {
            return;
        }
        for (i, &id) in pool.iter().enumerate().skip(from) {
            let c = self.shapes[id].count;
            if c > left {
                continue;
            }
            // counts are non-increasing along the pool
            if c * (slots as u64) < left {
                break;
            }
            picks.push(id);
            self.multisets(pool, i, left - c, slots - 1, picks, found);
            picks.pop();
        }
    }

    fn describe(&self, count: u64, children: Vec<usize>) -> ShapeInfo {
        let fan = 1u128 << self.d;
        let k = children.len() as u128;
        let mut orbit: u128 = (0..k).map(|i| fan - i).product();
        let mut run = 1u128;
        for w in children.windows(2) {
            if w[0] == w[1] {
                run += 1;
                orbit /= run;
            } else {
                run = 1;
            }
        }
        let mut leaf_levels = 0;
        for &c in &children {
            let s = &self.shapes[c];
            orbit *= s.orbit;
            leaf_levels += s.leaf_levels + s.count;
        }
        ShapeInfo {
            count,
            children,
            orbit,
            leaf_levels,
        }
    }

    pub fn count(&self, id: usize) -> u64 {
        self.shapes[id].count
    }

    /// Number of labeled trees the shape stands for.
    pub fn orbit(&self, id: usize) -> u128 {
        self.shapes[id].orbit
    }

    /// `sum_points level(leaf)`; the set of configurations inducing one
    /// labeled tree has volume `n! 2^{-d * leaf_levels}`.
    pub fn leaf_levels(&self, id: usize) -> u64 {
        self.shapes[id].leaf_levels
    }

    /// Root children counts, sorted non-increasing and padded to `2^d`.
    pub fn root_composition(&self, id: usize) -> Vec<u64> {
        let mut v: Vec<u64> = self.shapes[id]
            .children
            .iter()
            .map(|&c| self.shapes[c].count)
            .collect();
        v.resize(1 << self.d, 0);
        v
    }

    /// Child-index paths from the root to each point's leaf, children placed
    /// at indices `0, 1, ...` in canonical order.
    fn leaf_paths(&self, id: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let s = &self.shapes[id];
        if s.children.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for (i, &c) in s.children.iter().enumerate() {
            prefix.push(i);
            self.leaf_paths(c, prefix, out);
            prefix.pop();
        }
    }

    /// Energy by summing `2^{(d-2)(k-1)}` over ordered pairs of points, with
    /// `k - 1` the length of the common prefix of their leaf paths.
    pub fn energy(&self, id: usize) -> u128 {
        let mut paths = Vec::new();
        self.leaf_paths(id, &mut Vec::new(), &mut paths);
        let mut h = 0u128;
        for (a, pa) in paths.iter().enumerate() {
            for pb in &paths[a + 1..] {
                let shared = pa.iter().zip(pb).take_while(|(x, y)| x == y).count();
                h += 2u128 << ((self.d as usize - 2) * shared);
            }
        }
        h
    }

    /// The canonical labeled representative.
    pub fn to_tree(&self, id: usize) -> CountTree {
        let d = self.d;
        let mut nodes = BTreeMap::new();
        let root = DyadicCube::root(d);
        nodes.insert(root.clone(), self.shapes[id].count);
        let mut stack = vec![(root, id)];
        while let Some((cube, sid)) = stack.pop() {
            for (i, &c) in self.shapes[sid].children.iter().enumerate() {
                let child = cube.child(i);
                nodes.insert(child.clone(), self.shapes[c].count);
                stack.push((child, c));
            }
        }
        CountTree::from_map_unchecked(d, nodes)
    }
}

/// Result of exhaustive minimization.
#[derive(Debug, Clone)]
pub struct BruteMinimum {
    pub energy: u128,
    /// One canonical tree per minimizing shape, with its labeled multiplicity.
    pub minimizers: Vec<(CountTree, u128)>,
    /// `(canonical tree, energy, multiplicity)` for every enumerated shape.
    pub all: Vec<(CountTree, u128, u128)>,
}

/// Exhaustive minimum of the Hamiltonian over all trees of depth at most
/// `base_level(n) + 1`; deeper splits can always be re-grounded without
/// raising the energy.
pub fn brute_min_energy(n: u64, d: u32) -> Result<BruteMinimum> {
    let mut arena = ShapeArena::new(d)?;
    if n <= 1 {
        let t = CountTree::single_root(d, n)?;
        return Ok(BruteMinimum {
            energy: 0,
            minimizers: vec![(t.clone(), 1)],
            all: vec![(t, 0, 1)],
        });
    }
    let ids = arena.shapes(n, base_level(n, d) + 1)?;
    let all: Vec<(CountTree, u128, u128)> = ids
        .iter()
        .map(|&id| (arena.to_tree(id), arena.energy(id), arena.orbit(id)))
        .collect();
    let energy = all.iter().map(|a| a.1).min().expect("at least one tree");
    let minimizers = all
        .iter()
        .filter(|a| a.1 == energy)
        .map(|a| (a.0.clone(), a.2))
        .collect();
    Ok(BruteMinimum {
        energy,
        minimizers,
        all,
    })
}

/// Exact law of the level-1 composition by summing over all trees.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    /// Probability of each ordered composition with positive mass.
    pub probabilities: BTreeMap<Vec<u64>, f64>,
    /// `log Z` restricted to the enumerated depth.
    pub log_z: f64,
    pub depth: u32,
    /// Bound on the relative mass of trees deeper than `depth`.
    pub tail_bound: f64,
}

/// Enumerates trees deep enough that the neglected mass is below `1e-12`
/// relative to the enumerated mass: a configuration needing depth beyond `K`
/// has a pair sharing a level-`K` cube, which happens with probability at
/// most `C(n,2) 2^{-dK}` and costs at least `2 * 2^{(d-2)K}` in energy.
pub fn exact_count_distribution(n: u64, beta: f64, d: u32) -> Result<ExactDistribution> {
    check_dim(d)?;
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    if n > 6 {
        return Err(Error::InvalidArgument("exact distribution supports n <= 6".into()));
    }
    let fan = 1usize << d;
    let ln2 = std::f64::consts::LN_2;
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    let mut arena = ShapeArena::new(d)?;
    let mut depth = base_level(n.max(2), d);
    loop {
        let mut by_key: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
        let ids = if n <= 1 { vec![] } else { arena.shapes(n, depth)? };
        for &id in &ids {
            let h = arena.energy(id);
            let energy = if h == 0 { 0.0 } else { beta * h as f64 };
            let w = (arena.orbit(id) as f64).ln() - d as f64 * arena.leaf_levels(id) as f64 * ln2 - energy;
            by_key.entry(arena.root_composition(id)).or_default().push(w);
        }
        if n <= 1 {
            let mut comp = vec![0u64; fan];
            if n == 1 {
                comp[0] = 1;
            }
            by_key.insert(comp, vec![0.0]);
        }
        let sums: Vec<(Vec<u64>, f64)> = by_key
            .into_iter()
            .map(|(k, v)| (k, log_sum_exp(&v)))
            .collect();
        let total = log_sum_exp(&sums.iter().map(|s| s.1).collect::<Vec<_>>());
        let log_z = ln_factorial(n) + total;
        let k = depth as f64;
        let tail = if pairs == 0.0 {
            0.0
        } else {
            (pairs.ln() - d as f64 * k * ln2 - 2.0 * beta * 2f64.powf((d - 2) as f64 * k) - log_z)
                .exp()
        };
        if tail < 1e-12 {
            let mut probabilities = BTreeMap::new();
            for (sorted, lw) in sums {
                let p = (lw - total).exp();
                let orders = orderings(&sorted);
                let share = p / orders.len() as f64;
                for o in orders {
                    probabilities.insert(o, share);
                }
            }
            return Ok(ExactDistribution {
                probabilities,
                log_z,
                depth,
                tail_bound: tail,
            });
        }
        depth += 1;
    }
}

/// All distinct permutations of `v`.
fn orderings(v: &[u64]) -> Vec<Vec<u64>> {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for &x in v {
        *counts.entry(x).or_default() += 1;
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(v.len());
    fn rec(counts: &mut BTreeMap<u64, usize>, cur: &mut Vec<u64>, len: usize, out: &mut Vec<Vec<u64>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let keys: Vec<u64> = counts.iter().filter(|(_, &c)| c > 0).map(|(&k, _)| k).collect();
        for k in keys {
            *counts.get_mut(&k).unwrap() -= 1;
            cur.push(k);
            rec(counts, cur, len, out);
            cur.pop();
            *counts.get_mut(&k).unwrap() += 1;
        }
    }
    rec(&mut counts, &mut cur, v.len(), &mut out);
    out
}

/// Number of `n`-subsets of level-`h_n` cells achieving the minimum energy,
/// by exhaustive summation over all ordered count vectors level by level
/// (points in one base cell share no further structure, so each count
/// vector at the last split stands for `prod C(2^d, c_i)` subsets).
/// Returns `(minimum energy, number of minimizing subsets)`.
pub fn ground_patterns_brute(n: u64, d: u32) -> Result<(u128, u128)> {
    check_dim(d)?;
    let h = base_level(n, d);
    budget("count vectors", ln_compositions(n, d).exp() as u128 * u128::from(h.max(1)))?;
    let mut memo = HashMap::new();
    let map = energy_patterns(n, 0, h, d, &mut memo);
    let (&e, &c) = map.iter().next().expect("some pattern exists");
    Ok((e, c))
}

fn energy_patterns(
    count: u64,
    level: u32,
    h: u32,
    d: u32,
    memo: &mut HashMap<(u64, u32), BTreeMap<u128, u128>>,
) -> BTreeMap<u128, u128> {
    let cells_below = |lvl: u32| 1u128 << (d * (h - lvl));
    if count == 0 {
        return BTreeMap::from([(0, 1)]);
    }
    if count == 1 {
        return BTreeMap::from([(0, cells_below(level))]);
    }
    if level == h || count as u128 > cells_below(level) {
        return BTreeMap::new();
    }
    if let Some(m) = memo.get(&(count, level)) {
        return m.clone();
    }
    let fan = 1usize << d;
    let weight = 1u128 << ((d - 2) * level);
    let mut total: BTreeMap<u128, u128> = BTreeMap::new();
    let mut comp = vec![0u64; fan];
    for_each_composition(count, &mut comp, 0, &mut |comp| {
        let mut acc: BTreeMap<u128, u128> = BTreeMap::from([(0, 1)]);
        for &c in comp {
            let child = energy_patterns(c, level + 1, h, d, memo);
            let mut next = BTreeMap::new();
            for (&ea, &na) in &acc {
                for (&eb, &nb) in &child {
                    *next.entry(ea + eb).or_insert(0) += na * nb;
                }
            }
            acc = next;
            if acc.is_empty() {
                return;
            }
        }
        let sq: u128 = comp.iter().map(|&c| c as u128 * c as u128).sum();
        let cross = (count as u128 * count as u128 - sq) * weight;
        for (e, c) in acc {
            *total.entry(e + cross).or_insert(0) += c;
        }
    });
    memo.insert((count, level), total.clone());
    total
}

/// Log of the number of ordered level-1 compositions, for sanity checks.
pub fn ln_compositions(n: u64, d: u32) -> f64 {
    ln_choose(n + (1u64 << d) - 1, (1u64 << d) - 1)
}

/// One energy-gap comparison: `h1 - h2 >= bound` must hold.
#[derive(Debug, Clone)]
pub struct GapInstance {
    pub level: u32,
    pub h1: u128,
    pub h2: u128,
    /// `2^{(d-2)m} * sum_i dist^2(a_i, e_i)` (or `k^2` for the two-coordinate
    /// case).
    pub scale: u128,
}

impl GapInstance {
    /// `(h1 - h2) / scale`, the constant this instance certifies.
    pub fn ratio(&self) -> f64 {
        (self.h1 as f64 - self.h2 as f64) / self.scale as f64
    }
}

/// Tree whose level-`m-1` cubes `blocks[i].0` hold children counts
/// `blocks[i].1`, every child grounded; ancestors are filled in.
pub fn blocks_tree(d: u32, m: u32, blocks: &[(Vec<u64>, Vec<u64>)]) -> Result<CountTree> {
    let mut nodes: BTreeMap<DyadicCube, u64> = BTreeMap::new();
    for (coords, children) in blocks {
        let cube = DyadicCube::new(m - 1, coords)?;
        let total: u64 = children.iter().sum();
        let mut anc = Some(cube.clone());
        while let Some(c) = anc {
            *nodes.entry(c.clone()).or_insert(0) += total;
            anc = c.parent();
        }
        if total < 2 {
            continue;
        }
        for (i, &c) in children.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let child = cube.child(i);
            nodes.insert(child.clone(), c);
            graft_ground(&mut nodes, &child, c)?;
        }
    }
    nodes.entry(DyadicCube::root(d)).or_insert(0);
    // drop chain nodes below count-1 ancestors
    let keep: BTreeMap<DyadicCube, u64> = nodes
        .iter()
        .filter(|(c, _)| {
            let mut a = c.parent();
            while let Some(p) = a {
                if nodes.get(&p).copied().unwrap_or(0) < 2 {
                    return false;
                }
                a = p.parent();
            }
            true
        })
        .map(|(c, &n)| (c.clone(), n))
        .collect();
    CountTree::from_nodes(d, keep)
}

fn graft_ground(nodes: &mut BTreeMap<DyadicCube, u64>, at: &DyadicCube, count: u64) -> Result<()> {
    let d = at.dim();
    let sub = crate::groundstate::min_partition(count, d)?;
    for (cube, c) in sub.iter() {
        if cube.level() == 0 {
            continue;
        }
        let l = cube.level();
        let coords: Vec<u64> = at
            .coords()
            .iter()
            .zip(cube.coords())
            .map(|(&a, &b)| (a << l) | b)
            .collect();
        nodes.insert(DyadicCube::new(at.level() + l, &coords)?, c);
    }
    Ok(())
}

fn balanced(total: u64, fan: usize) -> Vec<u64> {
    let q = total / fan as u64;
    let r = (total % fan as u64) as usize;
    (0..fan).map(|i| q + u64::from(i < r)).collect()
}

fn random_coords<R: Rng>(rng: &mut R, d: u32, level: u32) -> Vec<u64> {
    (0..d)
        .map(|_| if level == 0 { 0 } else { rng.gen_range(0..1u64 << level) })
        .collect()
}

/// Moves `k` points from child 2 to child 1 of a level-`m-1` cube with
/// grounded children counts `b` (`b_1 >= b_2`).
pub fn two_coordinate_instance<R: Rng>(rng: &mut R, d: u32) -> Result<GapInstance> {
    check_dim(d)?;
    let fan = 1usize << d;
    let m = rng.gen_range(1..=3u32);
    let mut b: Vec<u64> = (0..fan).map(|_| rng.gen_range(0..=40)).collect();
    if b[0] < b[1] {
        b.swap(0, 1);
    }
    if b[1] == 0 {
        b[1] = 1;
        b[0] = b[0].max(1);
    }
    let k = rng.gen_range(1..=b[1]);
    let mut f1 = b.clone();
    f1[0] += k;
    f1[1] -= k;
    let coords = random_coords(rng, d, m - 1);
    let h1 = hamiltonian(&blocks_tree(d, m, &[(coords.clone(), f1)])?)?;
    let h2 = hamiltonian(&blocks_tree(d, m, &[(coords, b)])?)?;
    Ok(GapInstance {
        level: m,
        h1: to_u128(h1)?,
        h2: to_u128(h2)?,
        scale: (1u128 << ((d - 2) * m)) * (k as u128 * k as u128),
    })
}

/// Several level-`m-1` cubes; `P_1` splits each arbitrarily, `P_2` splits each
/// evenly; both ground beyond level `m`.
pub fn general_instance<R: Rng>(rng: &mut R, d: u32) -> Result<GapInstance> {
    check_dim(d)?;
    let fan = 1usize << d;
    let m = rng.gen_range(1..=3u32);
    let cubes = if m == 1 { 1 } else { rng.gen_range(1..=3usize) };
    let mut seen = std::collections::BTreeSet::new();
    let (mut p1, mut p2) = (Vec::new(), Vec::new());
    let mut dist_sq = 0u128;
    for _ in 0..cubes {
        let coords = random_coords(rng, d, m - 1);
        if !seen.insert(coords.clone()) {
            continue;
        }
        let spread = *[2u64, 5, 30].choose(rng).unwrap();
        let mut a: Vec<u64> = (0..fan).map(|_| rng.gen_range(0..=spread)).collect();
        if a.iter().sum::<u64>() == 0 {
            a[0] = 1;
        }
        let e = balanced(a.iter().sum(), fan);
        dist_sq += perm_distance_sq(&a, &e);
        p1.push((coords.clone(), a));
        p2.push((coords, e));
    }
    let h1 = hamiltonian(&blocks_tree(d, m, &p1)?)?;
    let h2 = hamiltonian(&blocks_tree(d, m, &p2)?)?;
    Ok(GapInstance {
        level: m,
        h1: to_u128(h1)?,
        h2: to_u128(h2)?,
        scale: (1u128 << ((d - 2) * m)) * dist_sq,
    })
}

fn to_u128(x: num_bigint::BigUint) -> Result<u128> {
    u128::try_from(&x).map_err(|_| Error::Overflow(format!("energy {x}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{count_ground_states, ground_energy, is_ground_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn labeled_counts() {
        assert_eq!(count_trees(2, 3, 1), 28);
        assert_eq!(count_trees(2, 3, 2), 252);
        assert_eq!(count_trees(1, 3, 5), 1);
        assert_eq!(enumerate_trees(2, 3, 1).unwrap().len(), 28);
        let two = enumerate_trees(2, 3, 2).unwrap();
        assert_eq!(two.len(), 252);
        assert!(two.iter().all(|t| t.is_resolved() && t.n() == 2));
        assert_eq!(enumerate_trees(1, 3, 0).unwrap().len(), 1);
        assert!(matches!(enumerate_trees(12, 3, 3), Err(Error::Budget { .. })));
    }

    #[test]
    fn shapes_account_for_every_labeled_tree() {
        for (n, depth) in [(2u64, 2u32), (3, 2), (4, 2), (5, 3)] {
            let mut arena = ShapeArena::new(3).unwrap();
            let ids = arena.shapes(n, depth).unwrap();
            let total: u128 = ids.iter().map(|&id| arena.orbit(id)).sum();
            assert_eq!(total, count_trees(n, 3, depth), "n={n}");
            for &id in &ids {
                let t = arena.to_tree(id);
                assert_eq!(hamiltonian(&t).unwrap(), arena.energy(id).into());
            }
        }
        // and against explicit labeled enumeration
        let labeled = enumerate_trees(3, 3, 2).unwrap();
        let mut arena = ShapeArena::new(3).unwrap();
        let ids = arena.shapes(3, 2).unwrap();
        let mut by_energy: BTreeMap<u128, u128> = BTreeMap::new();
        for &id in &ids {
            *by_energy.entry(arena.energy(id)).or_default() += arena.orbit(id);
        }
        let mut direct: BTreeMap<u128, u128> = BTreeMap::new();
        for t in &labeled {
            let h = u128::try_from(&hamiltonian(t).unwrap()).unwrap();
            *direct.entry(h).or_default() += 1;
        }
        assert_eq!(by_energy, direct);
    }

    #[test]
    fn small_minima() {
        let one = brute_min_energy(1, 3).unwrap();
        assert_eq!(one.energy, 0);
        let two = brute_min_energy(2, 3).unwrap();
        assert_eq!(two.energy, 2);
        assert_eq!(two.minimizers.len(), 1);
        assert_eq!(two.minimizers[0].1, 28);
        for n in 2..=9u64 {
            let b = brute_min_energy(n, 3).unwrap();
            assert_eq!(b.energy, ground_energy(n, 3).unwrap(), "n={n}");
            for (t, h, _) in &b.all {
                assert_eq!(*h == b.energy, is_ground_state(t), "n={n}");
            }
        }
    }

    #[test]
    fn pattern_counts() {
        for n in 0..=10u64 {
            let (e, c) = ground_patterns_brute(n, 3).unwrap();
            assert_eq!(e, ground_energy(n, 3).unwrap());
            assert_eq!(num_bigint::BigUint::from(c), count_ground_states(n, 3).unwrap(), "n={n}");
        }
    }

    #[test]
    fn two_point_distribution() {
        let ex = exact_count_distribution(2, 0.0, 3).unwrap();
        let same: f64 = ex
            .probabilities
            .iter()
            .filter(|(c, _)| c.contains(&2))
            .map(|(_, p)| p)
            .sum();
        assert!((same - 0.125).abs() < 1e-12);
        let total: f64 = ex.probabilities.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for beta in [0.5, 2.0] {
            let ex = exact_count_distribution(2, beta, 3).unwrap();
            assert!((ex.log_z - crate::zfun::two_point_series(beta, 3)).abs() < 1e-11);
        }
    }

    #[test]
    fn matches_dynamic_program() {
        for (n, beta) in [(3u64, 0.5), (4, 2.0), (5, 1.0)] {
            let ex = exact_count_distribution(n, beta, 3).unwrap();
            let t = crate::zfun::build_tables(n, beta, 3, 6).unwrap();
            assert!((ex.log_z - t.log_z(n, 0).ln()).abs() < 1e-10);
            for (comp, p) in &ex.probabilities {
                let q = t.composition_log_prob(0, comp).exp();
                assert!((p - q).abs() < 1e-10, "{comp:?}: {p} vs {q}");
            }
        }
    }

    #[test]
    fn gap_instances_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cprime = 1.0 / (2.0 * 9.0);
        for _ in 0..300 {
            let g = two_coordinate_instance(&mut rng, 3).unwrap();
            assert!(g.h1 >= g.h2 + g.scale, "{g:?}");
            let g = general_instance(&mut rng, 3).unwrap();
            assert!(g.h1 >= g.h2);
            if g.scale > 0 {
                assert!(g.ratio() >= cprime, "{g:?}");
            }
        }
    }
}
