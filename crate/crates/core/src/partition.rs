//! Dyadic cubes, hierarchical occupancy trees and exact Hamiltonians.
//!
//! Coordinates are 64-bit fixed-point fractions, so "same dyadic cube at
//! level `k`" means "same top `k` bits in every coordinate" and the
//! separation level of two points is one plus the smallest leading-zero
//! count of the coordinate-wise XOR.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::Zero;
use smallvec::SmallVec;

use crate::{check_dim, Error, Result, MAX_LEVEL};

pub(crate) type Coords = SmallVec<[u64; 4]>;

/// A half-open dyadic cube `prod_j [i_j 2^{-k}, (i_j + 1) 2^{-k})`.
///
/// Ordered by level, then lexicographically by coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicCube {
    level: u32,
    coords: Coords,
}

impl DyadicCube {
    pub fn new(level: u32, coords: &[u64]) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "level {level} exceeds {MAX_LEVEL}"
            )));
        }
        if level < 64 && coords.iter().any(|&c| c >> level != 0) {
            return Err(Error::InvalidArgument(format!(
                "coordinates {coords:?} out of range for level {level}"
            )));
        }
        Ok(Self {
            level,
            coords: coords.iter().copied().collect(),
        })
    }

    pub(crate) fn from_parts(level: u32, coords: Coords) -> Self {
        Self { level, coords }
    }

    pub fn root(d: u32) -> Self {
        Self {
            level: 0,
            coords: SmallVec::from_elem(0, d as usize),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn dim(&self) -> u32 {
        self.coords.len() as u32
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            level: self.level - 1,
            coords: self.coords.iter().map(|c| c >> 1).collect(),
        })
    }

    /// Child number `index` in lexicographic order of the child coordinates:
    /// bit `d-1-j` of `index` is the new low bit of coordinate `j`.
    pub fn child(&self, index: usize) -> Self {
        let d = self.coords.len();
        Self {
            level: self.level + 1,
            coords: self
                .coords
                .iter()
                .enumerate()
                .map(|(j, &c)| (c << 1) | ((index >> (d - 1 - j)) & 1) as u64)
                .collect(),
        }
    }

    /// Position of this cube among its parent's children.
    pub fn index_in_parent(&self) -> usize {
        let d = self.coords.len();
        self.coords
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &c)| acc | (((c & 1) as usize) << (d - 1 - j)))
    }

    /// Whether the fixed-point point lies in this cube.
    pub fn contains(&self, words: &[u64]) -> bool {
        if self.level == 0 {
            return true;
        }
        let shift = 64 - self.level;
        words.iter().zip(&self.coords).all(|(&w, &c)| w >> shift == c)
    }

    /// Lebesgue measure `2^{-d k}`.
    pub fn volume(&self) -> f64 {
        (-(self.level as f64) * self.dim() as f64 * std::f64::consts::LN_2).exp()
    }
}

/// Index of the child of a level-`level` cube that contains `words`.
#[inline]
pub(crate) fn child_index_of(words: &[u64], level: u32) -> usize {
    let d = words.len();
    let shift = 63 - level;
    words
        .iter()
        .enumerate()
        .fold(0usize, |acc, (j, &w)| acc | ((((w >> shift) & 1) as usize) << (d - 1 - j)))
}

/// Sparse particle counts per dyadic cube. The root is always stored; other
/// cubes are stored only when non-empty and their parent holds at least two
/// points, so a count-1 cube is always a leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTree {
    d: u32,
    nodes: BTreeMap<DyadicCube, u64>,
}

#[derive(Default, Clone, Copy)]
struct ChildStats {
    sum: u64,
    stored: u64,
    min: u64,
    max: u64,
}

impl CountTree {
    /// Validating constructor.
    pub fn from_nodes<I>(d: u32, nodes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (DyadicCube, u64)>,
    {
        check_dim(d)?;
        let mut map = BTreeMap::new();
        for (cube, count) in nodes {
            if cube.dim() != d {
                return Err(Error::MalformedTree(format!(
                    "cube {cube:?} has dimension {} (expected {d})",
                    cube.dim()
                )));
            }
            if map.insert(cube.clone(), count).is_some() {
                return Err(Error::MalformedTree(format!("duplicate node {cube:?}")));
            }
        }
        let tree = Self { d, nodes: map };
        tree.validate()?;
        Ok(tree)
    }

    pub(crate) fn from_map_unchecked(d: u32, nodes: BTreeMap<DyadicCube, u64>) -> Self {
        let tree = Self { d, nodes };
        debug_assert!(tree.validate().is_ok());
        tree
    }

    /// A tree holding `n` points at the root and nothing else.
    pub fn single_root(d: u32, n: u64) -> Result<Self> {
        Self::from_nodes(d, [(DyadicCube::root(d), n)])
    }

    fn child_stats(&self) -> HashMap<DyadicCube, ChildStats> {
        let mut stats: HashMap<DyadicCube, ChildStats> = HashMap::new();
        for (cube, &count) in &self.nodes {
            if let Some(parent) = cube.parent() {
                let s = stats.entry(parent).or_insert(ChildStats {
                    min: u64::MAX,
                    ..Default::default()
                });
                s.sum += count;
                s.stored += 1;
                s.min = s.min.min(count);
                s.max = s.max.max(count);
            }
        }
        stats
    }

    fn validate(&self) -> Result<()> {
        let root = DyadicCube::root(self.d);
        if !self.nodes.contains_key(&root) {
            return Err(Error::MalformedTree("missing root".into()));
        }
        for (cube, &count) in &self.nodes {
            if let Some(parent) = cube.parent() {
                if count == 0 {
                    return Err(Error::MalformedTree(format!("zero-count node {cube:?}")));
                }
                match self.nodes.get(&parent) {
                    None => {
                        return Err(Error::MalformedTree(format!("orphan node {cube:?}")));
                    }
                    Some(&pc) if pc < 2 => {
                        return Err(Error::MalformedTree(format!(
                            "node {cube:?} stored under parent with count {pc}"
                        )));
                    }
                    _ => {}
                }
            }
        }
        for (parent, s) in self.child_stats() {
            let count = self.nodes[&parent];
            if s.sum != count {
                return Err(Error::MalformedTree(format!(
                    "children of {parent:?} sum to {} but node holds {count}",
                    s.sum
                )));
            }
        }
        Ok(())
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Total number of points.
    pub fn n(&self) -> u64 {
        self.nodes[&DyadicCube::root(self.d)]
    }

    /// Count in `cube` (zero when not stored; only meaningful for cubes the
    /// tree resolves down to).
    pub fn count(&self, cube: &DyadicCube) -> u64 {
        self.nodes.get(cube).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicCube, u64)> {
        self.nodes.iter().map(|(c, &n)| (c, n))
    }

    pub fn has_children(&self, cube: &DyadicCube) -> bool {
        self.count(cube) >= 2 && self.nodes.contains_key(&cube.child(0))
            || (0..1usize << self.d).any(|i| self.nodes.contains_key(&cube.child(i)))
    }

    /// Counts of all `2^d` children, absent children as zero.
    pub fn children_counts(&self, cube: &DyadicCube) -> Vec<u64> {
        (0..1usize << self.d)
            .map(|i| self.count(&cube.child(i)))
            .collect()
    }

    /// Count-1 cubes; in a resolved tree these carry the points.
    pub fn leaves(&self) -> impl Iterator<Item = &DyadicCube> {
        self.nodes.iter().filter(|(_, &n)| n == 1).map(|(c, _)| c)
    }

    pub fn depth(&self) -> u32 {
        self.nodes.keys().map(|c| c.level).max().unwrap_or(0)
    }

    /// A tree is resolved when every node holding two or more points has
    /// stored children.
    pub fn is_resolved(&self) -> bool {
        self.first_unresolved().is_none()
    }

    fn first_unresolved(&self) -> Option<(&DyadicCube, u64)> {
        let parents: std::collections::HashSet<DyadicCube> =
            self.nodes.keys().filter_map(|c| c.parent()).collect();
        self.nodes
            .iter()
            .find(|(c, &n)| n >= 2 && !parents.contains(*c))
            .map(|(c, &n)| (c, n))
    }

    /// For every internal node, `(level, count, children counts incl. zeros)`
    /// reduced to the min/max over all `2^d` slots.
    pub(crate) fn sibling_spread(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let full = 1u64 << self.d;
        self.child_stats().into_values().map(move |s| {
            let min = if s.stored < full { 0 } else { s.min };
            (min, s.max)
        }).collect::<Vec<_>>().into_iter()
    }

    /// Per-level `sum_{internal v at l} N(v)^2 - sum_{c at l+1} N(c)^2`,
    /// i.e. the number of ordered pairs first separated at level `l + 1`.
    pub fn separated_pairs_by_level(&self) -> Result<Vec<u128>> {
        if let Some((cube, n)) = self.first_unresolved() {
            return Err(Error::Unresolved(format!("{cube:?}"), n));
        }
        let depth = self.depth() as usize;
        let mut plus = vec![0u128; depth + 1];
        let mut minus = vec![0u128; depth + 1];
        for (cube, &count) in &self.nodes {
            let sq = count as u128 * count as u128;
            if count >= 2 {
                plus[cube.level as usize] += sq;
            }
            if cube.level > 0 {
                minus[cube.level as usize - 1] += sq;
            }
        }
        Ok(plus.iter().zip(&minus).map(|(p, m)| p - m).collect())
    }

    /// Line-oriented text form: `level i_1 ... i_d count`, sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (cube, count) in &self.nodes {
            write!(out, "{}", cube.level).unwrap();
            for c in &cube.coords {
                write!(out, " {c}").unwrap();
            }
            writeln!(out, " {count}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut dim = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields = line
                .split_whitespace()
                .map(|t| t.parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if fields.len() < 2 + crate::MIN_DIM as usize {
                return Err(Error::Parse(format!("line {}: too few fields", lineno + 1)));
            }
            let d = fields.len() - 2;
            if *dim.get_or_insert(d) != d {
                return Err(Error::Parse(format!("line {}: dimension changes", lineno + 1)));
            }
            let level = u32::try_from(fields[0])
                .map_err(|_| Error::Parse(format!("line {}: bad level", lineno + 1)))?;
            let cube = DyadicCube::new(level, &fields[1..=d])?;
            nodes.push((cube, fields[d + 1]));
        }
        let d = dim.ok_or_else(|| Error::Parse("empty tree".into()))?;
        Self::from_nodes(d as u32, nodes)
    }
}

/// A point of `[0,1)^d` with coordinates `word / 2^64`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FixedPoint {
    words: Coords,
}

impl FixedPoint {
    pub fn from_words(words: &[u64]) -> Self {
        Self {
            words: words.iter().copied().collect(),
        }
    }

    /// Nearest representable point (truncating toward zero); values must lie
    /// in `[0, 1)`.
    pub fn from_f64s(xs: &[f64]) -> Result<Self> {
        let words = xs
            .iter()
            .map(|&x| f64_to_word(x))
            .collect::<Result<Coords>>()?;
        Ok(Self { words })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.words.iter().map(|&w| word_to_f64(w)).collect()
    }
}

const TWO_POW_64: f64 = 18446744073709551616.0;

pub(crate) fn f64_to_word(x: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("coordinate {x} outside [0,1)")));
    }
    Ok((x * TWO_POW_64) as u64)
}

#[inline]
pub(crate) fn word_to_f64(w: u64) -> f64 {
    w as f64 / TWO_POW_64
}

/// `n` pairwise distinct fixed-point points, stored flat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointConfiguration {
    d: u32,
    words: Vec<u64>,
}

impl PointConfiguration {
    pub fn new(d: u32, points: &[FixedPoint]) -> Result<Self> {
        check_dim(d)?;
        let mut words = Vec::with_capacity(points.len() * d as usize);
        for p in points {
            if p.words.len() != d as usize {
                return Err(Error::InvalidArgument(format!(
                    "point of dimension {} in a {d}-dimensional configuration",
                    p.words.len()
                )));
            }
            words.extend_from_slice(&p.words);
        }
        Self::from_words(d, words)
    }

    pub fn from_words(d: u32, words: Vec<u64>) -> Result<Self> {
        check_dim(d)?;
        if !words.len().is_multiple_of(d as usize) {
            return Err(Error::InvalidArgument("ragged coordinate buffer".into()));
        }
        let cfg = Self { d, words };
        let mut order: Vec<usize> = (0..cfg.len()).collect();
        order.sort_unstable_by(|&a, &b| cfg.point(a).cmp(cfg.point(b)));
        for w in order.windows(2) {
            if cfg.point(w[0]) == cfg.point(w[1]) {
                return Err(Error::CoLocated(w[0].min(w[1]), w[0].max(w[1])));
            }
        }
        Ok(cfg)
    }

    /// Caller guarantees distinct points (e.g. one per disjoint leaf cube).
    pub(crate) fn from_words_unchecked(d: u32, words: Vec<u64>) -> Self {
        Self { d, words }
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.words.len() / self.d as usize
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn point(&self, i: usize) -> &[u64] {
        let d = self.d as usize;
        &self.words[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[u64]> {
        self.words.chunks_exact(self.d as usize)
    }

    /// CSV with `d` decimal columns followed by `d` exact hexadecimal words.
    /// `meta`, when given, is written first as a `#` comment line.
    pub fn to_csv(&self, meta: Option<&str>) -> String {
        let d = self.d as usize;
        let mut out = String::new();
        if let Some(m) = meta {
            writeln!(out, "# {m}").unwrap();
        }
        let header: Vec<String> = (1..=d)
            .map(|j| format!("x{j}"))
            .chain((1..=d).map(|j| format!("w{j}")))
            .collect();
        writeln!(out, "{}", header.join(",")).unwrap();
        for p in self.points() {
            let row: Vec<String> = p
                .iter()
                .map(|&w| format!("{}", word_to_f64(w)))
                .chain(p.iter().map(|w| format!("0x{w:016x}")))
                .collect();
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let cols = header.split(',').count();
        if cols % 2 != 0 {
            return Err(Error::Parse("header must have 2d columns".into()));
        }
        let d = cols / 2;
        let mut words = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(Error::Parse(format!("row {}: expected {cols} fields", i + 1)));
            }
            for f in &fields[d..] {
                let hex = f.trim().trim_start_matches("0x");
                let w = u64::from_str_radix(hex, 16)
                    .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
                words.push(w);
            }
        }
        Self::from_words(d as u32, words)
    }
}

#[inline]
pub(crate) fn separation_level_words(x: &[u64], y: &[u64]) -> Option<u32> {
    let shared = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a ^ b).leading_zeros())
        .min()
        .unwrap_or(64);
    (shared < 64).then_some(shared + 1)
}

/// Smallest `k` such that `x` and `y` lie in different level-`k` cubes.
pub fn separation_level(x: &FixedPoint, y: &FixedPoint) -> Result<u32> {
    separation_level_words(&x.words, &y.words).ok_or(Error::CoLocated(0, 1))
}

/// `w(x, y) = 2^{(d-2)(k-1)}` with `k` the separation level.
pub fn pair_potential(x: &FixedPoint, y: &FixedPoint, d: u32) -> Result<BigUint> {
    check_dim(d)?;
    let k = separation_level(x, y)?;
    Ok(BigUint::from(1u8) << ((d - 2) * (k - 1)))
}

fn weigh_levels(pairs_by_level: &[u128], d: u32) -> BigUint {
    pairs_by_level
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .fold(BigUint::zero(), |acc, (l, &c)| {
            acc + (BigUint::from(c) << ((d - 2) as usize * l))
        })
}

/// `H = sum_k 2^{(d-2)(k-1)} sum_{v in D_{k-1}} (N(v)^2 - sum_children N(c)^2)`.
pub fn hamiltonian(tree: &CountTree) -> Result<BigUint> {
    let pairs = tree.separated_pairs_by_level()?;
    Ok(weigh_levels(&pairs, tree.d))
}

/// Direct ordered-pair sum, `O(n^2)`.
pub fn hamiltonian_points(cfg: &PointConfiguration) -> Result<BigUint> {
    let mut pairs = [0u128; 65];
    let n = cfg.len();
    for i in 0..n {
        for j in i + 1..n {
            let k = separation_level_words(cfg.point(i), cfg.point(j))
                .ok_or(Error::CoLocated(i, j))?;
            pairs[k as usize - 1] += 2;
        }
    }
    Ok(weigh_levels(&pairs, cfg.d))
}

/// The unique resolved tree of a configuration.
pub fn induce_tree(cfg: &PointConfiguration) -> Result<CountTree> {
    let d = cfg.d;
    let mut nodes = BTreeMap::new();
    let root = DyadicCube::root(d);
    nodes.insert(root.clone(), cfg.len() as u64);
    let mut idx: Vec<usize> = (0..cfg.len()).collect();
    let mut stack = vec![(root, 0usize, idx.len())];
    while let Some((cube, lo, hi)) = stack.pop() {
        if hi - lo < 2 {
            continue;
        }
        if cube.level == MAX_LEVEL {
            return Err(Error::CoLocated(idx[lo], idx[lo + 1]));
        }
        let level = cube.level;
        idx[lo..hi].sort_unstable_by_key(|&i| child_index_of(cfg.point(i), level));
        let mut start = lo;
        while start < hi {
            let key = child_index_of(cfg.point(idx[start]), level);
            let mut end = start + 1;
            while end < hi && child_index_of(cfg.point(idx[end]), level) == key {
                end += 1;
            }
            let child = cube.child(key);
            nodes.insert(child.clone(), (end - start) as u64);
            stack.push((child, start, end));
            start = end;
        }
    }
    Ok(CountTree::from_map_unchecked(d, nodes))
}

/// Euclidean distance between the decreasingly sorted count vectors, the
/// minimum over all permutations of either.
pub fn perm_distance(v1: &[u64], v2: &[u64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            v1.len(),
            v2.len()
        )));
    }
    if v1.iter().sum::<u64>() != v2.iter().sum::<u64>() {
        return Err(Error::InvalidArgument("sum mismatch".into()));
    }
    Ok((perm_distance_sq(v1, v2) as f64).sqrt())
}

pub(crate) fn perm_distance_sq(v1: &[u64], v2: &[u64]) -> u128 {
    let mut a = v1.to_vec();
    let mut b = v2.to_vec();
    a.sort_unstable_by(|x, y| y.cmp(x));
    b.sort_unstable_by(|x, y| y.cmp(x));
    a.iter()
        .zip(&b)
        .map(|(&x, &y)| {
            let diff = x.abs_diff(y) as u128;
            diff * diff
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(words: &[u64]) -> FixedPoint {
        FixedPoint::from_words(words)
    }

    const HALF: u64 = 1 << 63;
    const QUARTER: u64 = 1 << 62;

    #[test]
    fn separation_examples() {
        assert_eq!(separation_level(&pt(&[0, 0, 0]), &pt(&[HALF, 0, 0])).unwrap(), 1);
        assert_eq!(separation_level(&pt(&[0, 0, 0]), &pt(&[0, QUARTER, 0])).unwrap(), 2);
        assert!(matches!(
            separation_level(&pt(&[5, 5, 5]), &pt(&[5, 5, 5])),
            Err(Error::CoLocated(..))
        ));
        assert_eq!(separation_level(&pt(&[0, 0, 0]), &pt(&[0, 0, 1])).unwrap(), 64);
    }

    #[test]
    fn potential_examples() {
        let a = pt(&[0, 0, 0]);
        assert_eq!(pair_potential(&a, &pt(&[HALF, 0, 0]), 3).unwrap(), 1u32.into());
        assert_eq!(pair_potential(&a, &pt(&[QUARTER, 0, 0]), 3).unwrap(), 2u32.into());
        let b = pt(&[0, 0, 0, 0]);
        let c = pt(&[0, 0, 0, QUARTER >> 1]);
        assert_eq!(pair_potential(&b, &c, 4).unwrap(), 16u32.into());
    }

    #[test]
    fn cube_children_round_trip() {
        let root = DyadicCube::root(3);
        for i in 0..8 {
            let c = root.child(i);
            assert_eq!(c.index_in_parent(), i);
            assert_eq!(c.parent().unwrap(), root);
        }
        // lexicographic child order
        let kids: Vec<_> = (0..8).map(|i| root.child(i)).collect();
        let mut sorted = kids.clone();
        sorted.sort();
        assert_eq!(kids, sorted);
        assert!(DyadicCube::new(1, &[2, 0, 0]).is_err());
    }

    #[test]
    fn hamiltonian_small_trees() {
        // two points, same level-1 cell, split at level 2
        let root = DyadicCube::root(3);
        let c = root.child(0);
        let tree = CountTree::from_nodes(
            3,
            [(root.clone(), 2), (c.clone(), 2), (c.child(0), 1), (c.child(5), 1)],
        )
        .unwrap();
        assert_eq!(hamiltonian(&tree).unwrap(), 4u32.into());
        assert_eq!(hamiltonian(&CountTree::single_root(3, 1).unwrap()).unwrap(), 0u32.into());
        assert_eq!(hamiltonian(&CountTree::single_root(3, 0).unwrap()).unwrap(), 0u32.into());
        assert!(matches!(
            hamiltonian(&CountTree::single_root(3, 2).unwrap()),
            Err(Error::Unresolved(..))
        ));
    }

    #[test]
    fn hamiltonian_nine_points() {
        // seven level-1 singletons plus one pair split at level 2: 70 + 2*2
        let root = DyadicCube::root(3);
        let mut nodes = vec![(root.clone(), 9)];
        nodes.push((root.child(0), 2));
        nodes.push((root.child(0).child(0), 1));
        nodes.push((root.child(0).child(1), 1));
        for i in 1..8 {
            nodes.push((root.child(i), 1));
        }
        let tree = CountTree::from_nodes(3, nodes).unwrap();
        assert_eq!(hamiltonian(&tree).unwrap(), 74u32.into());
    }

    #[test]
    fn malformed_trees_rejected() {
        let root = DyadicCube::root(3);
        let bad_sum = CountTree::from_nodes(3, [(root.clone(), 3), (root.child(0), 1)]);
        assert!(matches!(bad_sum, Err(Error::MalformedTree(_))));
        let orphan = CountTree::from_nodes(3, [(root.clone(), 1), (root.child(0).child(0), 1)]);
        assert!(orphan.is_err());
        let under_leaf = CountTree::from_nodes(3, [(root.clone(), 1), (root.child(0), 1)]);
        assert!(under_leaf.is_err());
    }

    #[test]
    fn induce_tree_examples() {
        let one = PointConfiguration::new(3, &[pt(&[1, 2, 3])]).unwrap();
        let t = induce_tree(&one).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.n(), 1);

        let two = PointConfiguration::new(3, &[pt(&[0, 0, 0]), pt(&[HALF, 0, 0])]).unwrap();
        let t = induce_tree(&two).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.children_counts(&DyadicCube::root(3)), vec![1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(hamiltonian_points(&two).unwrap(), 2u32.into());
    }

    fn random_config(rng: &mut ChaCha8Rng, n: usize, d: u32, clustered: bool) -> PointConfiguration {
        let words: Vec<u64> = (0..n * d as usize)
            .map(|_| {
                let w: u64 = rng.gen();
                if clustered {
                    // squeeze into a corner so deep splits occur
                    w >> rng.gen_range(0..12)
                } else {
                    w
                }
            })
            .collect();
        PointConfiguration::from_words(d, words).unwrap()
    }

    #[test]
    fn tree_matches_pair_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(n, d, clustered) in &[(1000, 3, false), (300, 4, true), (200, 5, true), (100, 3, true)] {
            let cfg = random_config(&mut rng, n, d, clustered);
            let tree = induce_tree(&cfg).unwrap();
            assert!(tree.is_resolved());
            assert_eq!(hamiltonian(&tree).unwrap(), hamiltonian_points(&cfg).unwrap());
            let pairs: u128 = tree.separated_pairs_by_level().unwrap().iter().sum();
            assert_eq!(pairs, (n as u128) * (n as u128 - 1));
            // round trip through the text form
            assert_eq!(CountTree::from_text(&tree.to_text()).unwrap(), tree);
        }
    }

    #[test]
    fn co_located_rejected() {
        let p = pt(&[7, 7, 7]);
        assert!(matches!(
            PointConfiguration::new(3, &[p.clone(), pt(&[1, 1, 1]), p]),
            Err(Error::CoLocated(0, 2))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = random_config(&mut rng, 50, 3, false);
        let text = cfg.to_csv(Some("seed=3"));
        assert!(text.starts_with("# seed=3\nx1,x2,x3,w1,w2,w3\n"));
        assert_eq!(PointConfiguration::from_csv(&text).unwrap(), cfg);
    }

    #[test]
    fn perm_distance_examples() {
        assert_eq!(perm_distance(&[3, 1], &[1, 3]).unwrap(), 0.0);
        assert!((perm_distance(&[2, 0], &[1, 1]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((perm_distance(&[2, 1, 1, 0], &[1, 1, 1, 1]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(perm_distance(&[1, 1], &[1, 1, 0]).is_err());
        assert!(perm_distance(&[2, 1], &[1, 1]).is_err());
    }
}
