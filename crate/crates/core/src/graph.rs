//! Problem instances: graphs, bit configurations, and the exact
//! independent-set oracles everything else is checked against.
//!
//! Vertices are 0-based internally. Bitstrings are written with the
//! leftmost character standing for vertex 1 (index 0).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on exhaustive enumeration (2^26 configurations).
pub const ENUMERATION_LIMIT: usize = 26;

/// Undirected simple graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    masks: Vec<u64>,
}

impl Graph {
    /// Builds a graph from an edge list. Edges are normalized to `(min, max)`;
    /// self-loops, duplicates and out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {}", a + 1)));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge ({}, {})",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        let masks = if n <= 64 {
            adjacency
                .iter()
                .map(|nb| nb.iter().fold(0u64, |m, &j| m | (1 << j)))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            n,
            edges,
            adjacency,
            masks,
        })
    }

    pub fn edgeless(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Average degree `2|E|/N`.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    /// Neighbor bitmask of vertex `i` (bit `j` set iff `j` is adjacent).
    /// Only available for `n <= 64`.
    pub fn mask(&self, i: usize) -> u64 {
        self.masks[i]
    }

    pub fn fits_in_word(&self) -> bool {
        self.n <= 64
    }

    /// True iff the bit-encoded configuration has no occupied edge.
    pub fn is_independent_index(&self, s: u64) -> bool {
        (0..self.n).all(|i| s >> i & 1 == 0 || s & self.masks[i] == 0)
    }

    /// True iff the bit-encoded configuration is a maximal independent set.
    pub fn is_maximal_index(&self, s: u64) -> bool {
        self.is_independent_index(s)
            && (0..self.n).all(|i| s >> i & 1 == 1 || s & self.masks[i] != 0)
    }

    /// Number of edges with both endpoints occupied.
    pub fn conflict_edges_index(&self, s: u64) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| s >> a & 1 == 1 && s >> b & 1 == 1)
            .count()
    }
}

/// Length-N bit configuration; `bits[i]` is the state of vertex `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    bits: Vec<bool>,
}

impl Config {
    pub fn zeros(n: usize) -> Self {
        Self {
            bits: vec![false; n],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Decodes a bit index (bit `i` = vertex `i`).
    pub fn from_index(index: u64, n: usize) -> Self {
        Self {
            bits: (0..n).map(|i| index >> i & 1 == 1).collect(),
        }
    }

    /// Bit index encoding; panics for more than 64 vertices.
    pub fn index(&self) -> u64 {
        assert!(self.bits.len() <= 64, "config too long for a word index");
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "bitstring contains '{other}'"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Config::from_bits)
    }
}

impl Serialize for Config {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Config {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Position of a configuration in the independent-set hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndependenceClass {
    NotIndependent,
    IndependentNonMaximal,
    MaximalNonMaximum,
    Maximum,
}

impl IndependenceClass {
    pub fn is_maximal(self) -> bool {
        matches!(self, Self::MaximalNonMaximum | Self::Maximum)
    }
}

fn check_len(g: &Graph, c: &Config) -> Result<()> {
    if c.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: c.len(),
        });
    }
    Ok(())
}

fn check_limit(g: &Graph, limit: usize, what: &'static str) -> Result<()> {
    if g.n() > limit || g.n() > 63 {
        return Err(Error::TooLarge {
            what,
            n: g.n(),
            limit: limit.min(63),
        });
    }
    Ok(())
}

pub fn is_independent(g: &Graph, c: &Config) -> Result<bool> {
    check_len(g, c)?;
    Ok(g.edges().iter().all(|&(a, b)| !(c.get(a) && c.get(b))))
}

/// True if some inactive vertex has an all-inactive neighborhood.
fn has_free_vertex(g: &Graph, c: &Config) -> bool {
    (0..g.n()).any(|i| !c.get(i) && g.neighbors(i).iter().all(|&j| !c.get(j)))
}

/// Classifies against a precomputed maximum independent set size.
pub fn classify_with(g: &Graph, c: &Config, mis_size: usize) -> Result<IndependenceClass> {
    if !is_independent(g, c)? {
        return Ok(IndependenceClass::NotIndependent);
    }
    if has_free_vertex(g, c) {
        return Ok(IndependenceClass::IndependentNonMaximal);
    }
    Ok(if c.count_ones() == mis_size {
        IndependenceClass::Maximum
    } else {
        IndependenceClass::MaximalNonMaximum
    })
}

pub fn classify(g: &Graph, c: &Config) -> Result<IndependenceClass> {
    check_len(g, c)?;
    let mis = mis_size(g)?;
    classify_with(g, c, mis)
}

/// Maximum independent set size by exhaustive search over independent sets.
pub fn mis_size(g: &Graph) -> Result<usize> {
    mis_size_with_limit(g, ENUMERATION_LIMIT)
}

pub fn mis_size_with_limit(g: &Graph, limit: usize) -> Result<usize> {
    check_limit(g, limit, "maximum independent set search")?;
    // Depth-first over include/exclude decisions; every independent set is
    // visited, nothing is pruned by bounds.
    fn walk(g: &Graph, i: usize, blocked: u64, size: usize, best: &mut usize) {
        if i == g.n() {
            *best = (*best).max(size);
            return;
        }
        if blocked >> i & 1 == 0 {
            walk(g, i + 1, blocked | g.mask(i), size + 1, best);
        }
        walk(g, i + 1, blocked, size, best);
    }
    let mut best = 0;
    walk(g, 0, 0, 0, &mut best);
    Ok(best)
}

/// All maximal independent sets, via pivoting enumeration on the complement
/// (maximal independent sets are maximal cliques of the complement graph).
/// Returned sorted by bit index.
pub fn enumerate_maximal_sets(g: &Graph) -> Result<Vec<Config>> {
    enumerate_maximal_sets_with_limit(g, ENUMERATION_LIMIT)
}

pub fn enumerate_maximal_sets_with_limit(g: &Graph, limit: usize) -> Result<Vec<Config>> {
    check_limit(g, limit, "maximal independent set enumeration")?;
    let mut out = maximal_indices_pivot(g);
    out.sort_unstable();
    Ok(out.into_iter().map(|s| Config::from_index(s, g.n())).collect())
}

/// Same set as [`enumerate_maximal_sets`] by scanning all 2^n configurations.
pub fn enumerate_maximal_sets_scan(g: &Graph) -> Result<Vec<Config>> {
    check_limit(g, ENUMERATION_LIMIT, "maximal independent set scan")?;
    Ok((0..1u64 << g.n())
        .filter(|&s| g.is_maximal_index(s))
        .map(|s| Config::from_index(s, g.n()))
        .collect())
}

pub(crate) fn maximal_indices_pivot(g: &Graph) -> Vec<u64> {
    let n = g.n();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    // In the complement, the neighbors of v are the non-neighbors of v.
    let comp: Vec<u64> = (0..n).map(|v| all & !g.mask(v) & !(1 << v)).collect();
    fn bk(comp: &[u64], r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>) {
        if p == 0 {
            if x == 0 {
                out.push(r);
            }
            return;
        }
        let px = p | x;
        let mut pivot = px.trailing_zeros() as usize;
        let mut best = 0;
        let mut rest = px;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let c = (p & comp[u]).count_ones();
            if c >= best {
                best = c;
                pivot = u;
            }
        }
        let mut todo = p & !comp[pivot];
        while todo != 0 {
            let v = todo.trailing_zeros() as usize;
            todo &= todo - 1;
            bk(comp, r | (1 << v), p & comp[v], x & comp[v], out);
            p &= !(1 << v);
            x |= 1 << v;
        }
    }
    let mut out = Vec::new();
    bk(&comp, 0, all, 0, &mut out);
    out
}

/// Cost function `-sum s_i + u * sum_{(i,j) in E} s_i s_j`.
pub fn mis_energy(g: &Graph, c: &Config, u: f64) -> Result<f64> {
    check_len(g, c)?;
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!("penalty weight must be > 0, got {u}")));
    }
    let occupied = c.count_ones() as f64;
    let violated = g
        .edges()
        .iter()
        .filter(|&&(a, b)| c.get(a) && c.get(b))
        .count() as f64;
    Ok(-occupied + u * violated)
}

/// Uniform random simple graph with exactly `round(k * n / 2)` edges.
pub fn gen_random_graph(n: usize, k_target: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Infeasible("n must be at least 1".into()));
    }
    if !(k_target >= 0.0) || k_target > (n - 1) as f64 {
        return Err(Error::Infeasible(format!(
            "average degree {k_target} outside [0, {}] for n = {n}",
            n - 1
        )));
    }
    let pairs = n * (n - 1) / 2;
    let m = (k_target * n as f64 / 2.0).round() as usize;
    if m > pairs {
        return Err(Error::Infeasible(format!(
            "{m} edges requested but only {pairs} pairs exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, pairs, m);
    let mut chosen: Vec<usize> = picks.into_iter().collect();
    chosen.sort_unstable();
    Graph::new(n, chosen.into_iter().map(|p| pair_from_rank(p, n)))
}

/// Inverse of the row-major ranking of pairs `(i, j)`, `i < j`.
fn pair_from_rank(mut rank: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if rank < row {
            return (i, i + 1 + rank);
        }
        rank -= row;
        i += 1;
    }
}

pub fn gen_open_chain(n: usize) -> Result<Graph> {
    Graph::new(n, (1..n).map(|i| (i - 1, i)))
}

/// Random unit-disk graph: points uniform in `[0, side]^2`, edge iff the
/// Euclidean distance is at most `radius`.
pub fn gen_unit_disk(n: usize, radius: f64, side: f64, seed: u64) -> Result<Graph> {
    Ok(gen_unit_disk_points(n, radius, side, seed)?.0)
}

pub fn gen_unit_disk_points(
    n: usize,
    radius: f64,
    side: f64,
    seed: u64,
) -> Result<(Graph, Vec<(f64, f64)>)> {
    if !(radius > 0.0) || !(side > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius and box must be positive (radius = {radius}, box = {side})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
            if (dx * dx + dy * dy).sqrt() <= radius {
                edges.push((i, j));
            }
        }
    }
    Ok((Graph::new(n, edges)?, pts))
}
