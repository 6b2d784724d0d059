//! Exact sampling from the Gibbs measure by top-down descent of the dyadic
//! tree.
//!
//! Given a node at level `k` holding `m` points, its children counts follow
//!
//! ```text
//! P(n_1..n_B) = prod_i f_k(n_i) / g_{k,B}(m)
//! ```
//!
//! and are drawn one child at a time from
//! `P(n_i = j | r left, t children left) = f_k(j) g_{k,t-1}(r-j) / g_{k,t}(r)`.
//! Subtrees of different children are independent given the counts. Nodes
//! below the truncation depth follow the ground-state law the tables were
//! seeded with.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::partition::{Coords, CountTree, DyadicCube, PointConfiguration};
use crate::zfun::LevelTables;
use crate::{Error, Result, MAX_LEVEL};

/// Tables plus a private random stream. Identical `(seed, stream)` over
/// identical tables reproduces every draw bit for bit.
#[derive(Debug, Clone)]
pub struct SamplerState<'a> {
    tables: &'a LevelTables,
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl<'a> SamplerState<'a> {
    pub fn new(tables: &'a LevelTables, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            tables,
            rng,
            seed,
            stream,
        }
    }

    pub fn tables(&self) -> &'a LevelTables {
        self.tables
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Metadata line for emitted configurations.
    pub fn metadata(&self, n: u64) -> String {
        let t = self.tables;
        format!(
            "seed={},stream={},n={},beta={},d={},depth_pad={}",
            self.seed,
            self.stream,
            n,
            t.beta(),
            t.d(),
            t.depth_pad()
        )
    }

    /// Children counts of a level-`k` node holding `m` points.
    pub fn sample_counts(&mut self, m: u64, k: u32) -> Result<Vec<u64>> {
        self.check_count(m)?;
        if k > self.tables.depth() {
            return Err(Error::InvalidArgument(format!(
                "level {k} is below the table depth {}",
                self.tables.depth()
            )));
        }
        let mut out = vec![0u64; self.tables.fan()];
        self.draw_counts(m, k, &mut out);
        Ok(out)
    }

    fn check_count(&self, m: u64) -> Result<()> {
        if m > self.tables.n() {
            return Err(Error::InvalidArgument(format!(
                "count {m} exceeds the {} points the tables cover",
                self.tables.n()
            )));
        }
        Ok(())
    }

    fn draw_counts(&mut self, m: u64, k: u32, out: &mut [u64]) {
        let t = self.tables;
        let fan = out.len();
        let beta = t.beta_at(k);
        let eps = t.eps();
        let psi1 = t.psi(k, 1);
        out.iter_mut().for_each(|c| *c = 0);
        let mut r = m as usize;
        for (i, slot) in out.iter_mut().enumerate().take(fan - 1) {
            if r == 0 {
                return;
            }
            let left = fan - i;
            let (e_t, p_t) = (t.balanced(left)[r], t.psi(k, left)[r]);
            let (e_rest, p_rest) = (t.balanced(left - 1), t.psi(k, left - 1));
            let log_p = |j: usize| {
                beta * (eps[j] + e_rest[r - j] - e_t) + psi1[j] + p_rest[r - j] - p_t
            };
            let j = inverse_cdf(&mut self.rng, r, (r + left / 2) / left, log_p);
            *slot = j as u64;
            r -= j;
        }
        out[fan - 1] = r as u64;
    }

    /// Visits every node of a sampled tree rooted at `n` points: `node` sees
    /// `(level, coords, count)` of each stored non-root node.
    fn descend(&mut self, n: u64, node: &mut dyn FnMut(u32, &[u64], u64)) -> Result<()> {
        self.check_count(n)?;
        let t = self.tables;
        let d = t.d() as usize;
        let fan = t.fan();
        let depth = t.depth();
        let mut counts = vec![0u64; fan];
        let mut stack: Vec<(u32, Coords, u64)> = vec![(0, SmallVec::from_elem(0, d), n)];
        while let Some((level, coords, count)) = stack.pop() {
            if count < 2 {
                continue;
            }
            if level >= MAX_LEVEL {
                return Err(Error::DepthExhausted(MAX_LEVEL));
            }
            if level <= depth {
                self.draw_counts(count, level, &mut counts);
            } else {
                let (q, r) = (count >> d, (count & (fan as u64 - 1)) as usize);
                counts.iter_mut().for_each(|c| *c = q);
                for i in index::sample(&mut self.rng, fan, r) {
                    counts[i] += 1;
                }
            }
            for (c, &cnt) in counts.iter().enumerate() {
                if cnt == 0 {
                    continue;
                }
                let child: Coords = coords
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| (x << 1) | ((c >> (d - 1 - j)) & 1) as u64)
                    .collect();
                node(level + 1, &child, cnt);
                if cnt >= 2 {
                    stack.push((level + 1, child, cnt));
                }
            }
        }
        Ok(())
    }

    /// An occupancy tree of `n` points from the (truncated) Gibbs law.
    pub fn sample_partition(&mut self, n: u64) -> Result<CountTree> {
        let d = self.tables.d();
        let mut nodes = std::collections::BTreeMap::new();
        nodes.insert(DyadicCube::root(d), n);
        self.descend(n, &mut |level, coords, count| {
            nodes.insert(DyadicCube::from_parts(level, coords.into()), count);
        })?;
        Ok(CountTree::from_map_unchecked(d, nodes))
    }

    /// Places one uniform point in every count-1 leaf of `tree`, in random
    /// order.
    pub fn sample_points(&mut self, tree: &CountTree) -> Result<PointConfiguration> {
        if !tree.is_resolved() {
            return Err(Error::Unresolved("tree".into(), tree.n()));
        }
        let d = tree.d() as usize;
        let mut words = Vec::with_capacity(tree.n() as usize * d);
        for leaf in tree.leaves() {
            push_point(&mut self.rng, leaf.level(), leaf.coords(), &mut words);
        }
        shuffle_points(&mut self.rng, &mut words, d);
        Ok(PointConfiguration::from_words_unchecked(tree.d(), words))
    }

    /// Tree and point sampling fused, skipping the intermediate tree.
    pub fn sample_configuration(&mut self, n: u64) -> Result<PointConfiguration> {
        let d = self.tables.d() as usize;
        let mut words = Vec::with_capacity(n as usize * d);
        if n == 1 {
            push_point(&mut self.rng, 0, &vec![0; d], &mut words);
        } else {
            let mut leaves: Vec<(u32, Coords)> = Vec::with_capacity(n as usize);
            self.descend(n, &mut |level, coords, count| {
                if count == 1 {
                    leaves.push((level, coords.into()));
                }
            })?;
            for (level, coords) in &leaves {
                push_point(&mut self.rng, *level, coords, &mut words);
            }
        }
        shuffle_points(&mut self.rng, &mut words, d);
        Ok(PointConfiguration::from_words_unchecked(d as u32, words))
    }
}

/// `start, start+1, start-1, start+2, ...` restricted to `0..=r`.
fn outward(start: usize, r: usize) -> impl Iterator<Item = usize> {
    (0..=2 * r + 1).filter_map(move |step| {
        let j = if step % 2 == 0 {
            start.checked_add(step / 2)
        } else {
            start.checked_sub(step / 2 + 1)
        };
        j.filter(|&j| j <= r)
    })
}

/// Draws `j in 0..=r` with log-probabilities `log_p` by inverse CDF over the
/// fixed outward order from `start`, which visits the likely values first.
fn inverse_cdf<R: Rng>(rng: &mut R, r: usize, start: usize, log_p: impl Fn(usize) -> f64) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for j in outward(start, r) {
        acc += log_p(j).exp();
        if acc > u {
            return j;
        }
    }
    // rounding left the total mass just below u: rescan against the total
    let target = u * acc;
    let mut again = 0.0;
    let mut last = start.min(r);
    for j in outward(start, r) {
        let p = log_p(j).exp();
        if p > 0.0 {
            last = j;
        }
        again += p;
        if again > target {
            return j;
        }
    }
    last
}

fn push_point<R: Rng>(rng: &mut R, level: u32, coords: &[u64], words: &mut Vec<u64>) {
    for &c in coords {
        let fresh: u64 = rng.gen();
        let w = match level {
            0 => fresh,
            64 => c,
            l => (c << (64 - l)) | (fresh >> l),
        };
        words.push(w);
    }
}

fn shuffle_points<R: Rng>(rng: &mut R, words: &mut [u64], d: usize) {
    let n = words.len() / d;
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        if i != j {
            for c in 0..d {
                words.swap(i * d + c, j * d + c);
            }
        }
    }
}
