//! Exact analysis of the automaton's Markov chain: transition kernel,
//! absorption probabilities from the all-zero start, expected absorption
//! time, and closed-form reference values for small instances.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{mis_size_with_limit, Config, Graph};
use crate::sparse::{bicgstab, CsrMatrix};

/// Default cap on exact chain construction.
pub const EXACT_LIMIT: usize = 20;

/// Transient-state count up to which the solve is a dense LU.
pub const DENSE_SOLVE_LIMIT: usize = 2500;

/// Hard cap on stored kernel entries.
pub const KERNEL_NNZ_LIMIT: usize = 60_000_000;

/// Synchronous update rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Each site reads its neighborhood in the previous configuration:
    /// any active neighbor forces 0, an isolated active site stays 1, a
    /// free site activates with probability p.
    #[default]
    Local,
    /// Two-phase variant: if any edge is doubly occupied, the active
    /// endpoints of such edges switch off, other sites keep their state
    /// and nobody activates; otherwise free sites activate with
    /// probability p.
    ConflictFirst,
}

impl std::str::FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Self::Local),
            "conflict-first" | "conflict_first" => Ok(Self::ConflictFirst),
            _ => Err(Error::InvalidParameter(format!(
                "unknown update rule {s:?} (local, conflict-first)"
            ))),
        }
    }
}

/// Deterministic part of an update and the set of sites that flip a coin.
/// Works on bit indices; requires `n <= 64`.
pub(crate) fn split_update(g: &Graph, s: u64, rule: UpdateRule) -> (u64, u64) {
    let n = g.n();
    match rule {
        UpdateRule::Local => {
            let mut base = 0u64;
            let mut free = 0u64;
            for i in 0..n {
                if s & g.mask(i) != 0 {
                    continue;
                }
                if s >> i & 1 == 1 {
                    base |= 1 << i;
                } else {
                    free |= 1 << i;
                }
            }
            (base, free)
        }
        UpdateRule::ConflictFirst => {
            let conflicted = (0..n)
                .filter(|&i| s >> i & 1 == 1 && s & g.mask(i) != 0)
                .fold(0u64, |m, i| m | 1 << i);
            if conflicted != 0 {
                return (s & !conflicted, 0);
            }
            let free = (0..n)
                .filter(|&i| s >> i & 1 == 0 && s & g.mask(i) == 0)
                .fold(0u64, |m, i| m | 1 << i);
            (s, free)
        }
    }
}

/// Distribution of the next state of one site under the local rule,
/// indexed by bit value: `[P(0), P(1)]`. `neighborhood` lists the states
/// of `g.neighbors(i)` in order.
pub fn local_theta(g: &Graph, i: usize, neighborhood: &[bool], own: bool, p: f64) -> Result<[f64; 2]> {
    if i >= g.n() {
        return Err(Error::InvalidParameter(format!("vertex {} out of range", i + 1)));
    }
    if neighborhood.len() != g.degree(i) {
        return Err(Error::InvalidParameter(format!(
            "incomplete neighborhood for vertex {}: {} of {} neighbors given",
            i + 1,
            neighborhood.len(),
            g.degree(i)
        )));
    }
    check_p(p)?;
    Ok(if neighborhood.iter().any(|&b| b) {
        [1.0, 0.0]
    } else if own {
        [0.0, 1.0]
    } else {
        [1.0 - p, p]
    })
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_exact(g: &Graph) -> Result<()> {
    if g.n() > EXACT_LIMIT {
        return Err(Error::TooLarge {
            what: "exact Markov analysis",
            n: g.n(),
            limit: EXACT_LIMIT,
        });
    }
    Ok(())
}

/// Sparse successor distribution of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub source: Config,
    pub successors: BTreeMap<Config, f64>,
}

impl TransitionRow {
    pub fn total(&self) -> f64 {
        self.successors.values().sum()
    }

    pub fn prob(&self, c: &Config) -> f64 {
        self.successors.get(c).copied().unwrap_or(0.0)
    }
}

/// Successors as (bit index, probability); zero-probability branches are
/// dropped, so for `p` in (0, 1) the row has `2^f` entries.
pub(crate) fn row_indices(g: &Graph, s: u64, p: f64, rule: UpdateRule) -> Vec<(u64, f64)> {
    let (base, free) = split_update(g, s, rule);
    let q = 1.0 - p;
    let f = free.count_ones();
    let mut out = Vec::with_capacity(1 << f);
    // Enumerate subsets of `free` in increasing submask order.
    let mut sub = 0u64;
    loop {
        let k = sub.count_ones() as i32;
        let w = p.powi(k) * q.powi(f as i32 - k);
        if w > 0.0 {
            out.push((base | sub, w));
        }
        if sub == free {
            break;
        }
        sub = (sub.wrapping_sub(free)) & free;
    }
    out
}

pub fn transition_row(g: &Graph, s: &Config, p: f64) -> Result<TransitionRow> {
    transition_row_with(g, s, p, UpdateRule::Local)
}

pub fn transition_row_with(g: &Graph, s: &Config, p: f64, rule: UpdateRule) -> Result<TransitionRow> {
    check_exact(g)?;
    check_p(p)?;
    if s.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: s.len(),
        });
    }
    let successors = row_indices(g, s.index(), p, rule)
        .into_iter()
        .map(|(t, w)| (Config::from_index(t, g.n()), w))
        .collect();
    Ok(TransitionRow {
        source: s.clone(),
        successors,
    })
}

/// Configurations mapped to themselves with probability 1.
pub fn absorbing_states(g: &Graph, rule: UpdateRule) -> Result<Vec<Config>> {
    check_exact(g)?;
    Ok((0..1u64 << g.n())
        .into_par_iter()
        .filter(|&s| split_update(g, s, rule) == (s, 0))
        .map(|s| Config::from_index(s, g.n()))
        .collect())
}

/// How the linear systems were solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    DenseLu,
    Bicgstab,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionReport {
    pub p: f64,
    pub rule: UpdateRule,
    /// Absorption probability from 00..0 per absorbing configuration.
    pub absorbers: BTreeMap<Config, f64>,
    pub p_mis: f64,
    pub p_mis_complement: f64,
    pub expected_steps: f64,
    pub transient_states: usize,
    pub method: SolveMethod,
}

/// Reachable chain from 00..0: transient states are indexed first in BFS
/// order, absorbing states are kept separately.
pub(crate) struct ReachableChain {
    pub transient: Vec<u64>,
    pub absorbing: Vec<u64>,
    /// Row `i` of Q (transient -> transient).
    pub q: CsrMatrix,
    /// Row `i` of R (transient -> absorbing).
    pub r: CsrMatrix,
}

pub(crate) fn build_chain(g: &Graph, p: f64, rule: UpdateRule) -> Result<ReachableChain> {
    enum Slot {
        Transient(usize),
        Absorbing(usize),
    }
    let mut slot: HashMap<u64, Slot> = HashMap::new();
    let mut transient = Vec::new();
    let mut absorbing = Vec::new();
    let mut rows: Vec<Vec<(u64, f64)>> = Vec::new();
    let mut nnz = 0usize;
    let is_absorbing = |s: u64| split_update(g, s, rule) == (s, 0);

    if is_absorbing(0) {
        absorbing.push(0);
        slot.insert(0, Slot::Absorbing(0));
    } else {
        transient.push(0);
        slot.insert(0, Slot::Transient(0));
    }
    // Expand BFS layers in parallel; slot assignment stays sequential so
    // the numbering is deterministic.
    let mut frontier = transient.clone();
    while !frontier.is_empty() {
        let layer: Vec<Vec<(u64, f64)>> = frontier
            .par_iter()
            .map(|&s| row_indices(g, s, p, rule))
            .collect();
        let mut next = Vec::new();
        for row in layer {
            nnz += row.len();
            if nnz > KERNEL_NNZ_LIMIT {
                return Err(Error::TooLarge {
                    what: "exact kernel storage (use Monte Carlo)",
                    n: g.n(),
                    limit: g.n() - 1,
                });
            }
            for &(t, _) in &row {
                if slot.contains_key(&t) {
                    continue;
                }
                if is_absorbing(t) {
                    slot.insert(t, Slot::Absorbing(absorbing.len()));
                    absorbing.push(t);
                } else {
                    slot.insert(t, Slot::Transient(transient.len()));
                    transient.push(t);
                    next.push(t);
                }
            }
            rows.push(row);
        }
        frontier = next;
    }

    let mut q_trip = Vec::with_capacity(rows.len());
    let mut r_trip = Vec::with_capacity(rows.len());
    for row in rows {
        let mut qr = Vec::new();
        let mut rr = Vec::new();
        for (t, w) in row {
            match slot[&t] {
                Slot::Transient(j) => qr.push((j, w)),
                Slot::Absorbing(j) => rr.push((j, w)),
            }
        }
        q_trip.push(qr);
        r_trip.push(rr);
    }
    Ok(ReachableChain {
        q: CsrMatrix::from_rows(transient.len(), q_trip),
        r: CsrMatrix::from_rows(absorbing.len(), r_trip),
        transient,
        absorbing,
    })
}

pub fn absorption_analysis(g: &Graph, p: f64) -> Result<AbsorptionReport> {
    absorption_analysis_with(g, p, UpdateRule::Local)
}

pub fn absorption_analysis_with(g: &Graph, p: f64, rule: UpdateRule) -> Result<AbsorptionReport> {
    check_exact(g)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "exact absorption analysis needs p in (0, 1), got {p}"
        )));
    }
    let chain = build_chain(g, p, rule)?;
    let m = chain.transient.len();
    let (b0, t0, method) = if m <= DENSE_SOLVE_LIMIT {
        let (b0, t0) = solve_dense(&chain)?;
        (b0, t0, SolveMethod::DenseLu)
    } else {
        let (b0, t0) = solve_adjoint_iterative(&chain)?;
        (b0, t0, SolveMethod::Bicgstab)
    };
    let mis = mis_size_with_limit(g, EXACT_LIMIT)?;
    let mut absorbers = BTreeMap::new();
    let (mut p_mis, mut p_other) = (0.0, 0.0);
    for (j, &s) in chain.absorbing.iter().enumerate() {
        let prob = b0[j];
        if s.count_ones() as usize == mis {
            p_mis += prob;
        } else {
            p_other += prob;
        }
        absorbers.insert(Config::from_index(s, g.n()), prob);
    }
    Ok(AbsorptionReport {
        p,
        rule,
        absorbers,
        p_mis,
        p_mis_complement: p_other,
        expected_steps: t0,
        transient_states: m,
        method,
    })
}

fn condition_estimate(lu_diag: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = lu_diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
        (lo.min(d.abs()), hi.max(d.abs()))
    });
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `(I - Q) B = R` and `(I - Q) t = 1` with one LU factorization and
/// returns the row of B and entry of t for the start state.
fn solve_dense(chain: &ReachableChain) -> Result<(Vec<f64>, f64)> {
    let m = chain.transient.len();
    let a = m_minus_q(chain);
    let lu = a.lu();
    let cond = condition_estimate(lu.u().diagonal().iter().copied());
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::Numerical {
            msg: "I - Q is singular".into(),
            condition: cond,
        });
    }
    let k = chain.absorbing.len();
    let mut rhs = DMatrix::<f64>::zeros(m, k + 1);
    for i in 0..m {
        for &(j, w) in chain.r.row(i) {
            rhs[(i, j)] += w;
        }
        rhs[(i, k)] = 1.0;
    }
    let x = lu.solve(&rhs).ok_or(Error::Numerical {
        msg: "LU solve failed".into(),
        condition: cond,
    })?;
    let b0 = (0..k).map(|j| x[(0, j)]).collect();
    Ok((b0, x[(0, k)]))
}

fn m_minus_q(chain: &ReachableChain) -> DMatrix<f64> {
    let m = chain.transient.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    for i in 0..m {
        for &(j, w) in chain.q.row(i) {
            a[(i, j)] -= w;
        }
    }
    a
}

/// Start-row-only route: solves `(I - Q)^T y = e_0`; then `B_0 = y^T R`
/// and the expected step count is `sum(y)` (expected visits per state).
fn solve_adjoint_iterative(chain: &ReachableChain) -> Result<(Vec<f64>, f64)> {
    let m = chain.transient.len();
    let qt = chain.q.transpose();
    let apply = |x: &[f64], y: &mut [f64]| {
        qt.mul_vec(x, y);
        y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi = xi - *yi);
    };
    let mut e0 = vec![0.0; m];
    e0[0] = 1.0;
    let sol = bicgstab(m, apply, &e0, 1e-12, 20 * m.max(100)).map_err(|res| Error::Numerical {
        msg: format!("BiCGSTAB stalled at relative residual {res:.3e}"),
        condition: f64::NAN,
    })?;
    let k = chain.absorbing.len();
    let mut b0 = vec![0.0; k];
    for (i, yi) in sol.iter().enumerate() {
        for &(j, w) in chain.r.row(i) {
            b0[j] += yi * w;
        }
    }
    Ok((b0, sol.iter().sum()))
}

/// Same quantities through the adjoint system with a dense solve; used to
/// cross-check the two routes.
pub fn absorption_from_adjoint(g: &Graph, p: f64, rule: UpdateRule) -> Result<AbsorptionReport> {
    check_exact(g)?;
    let chain = build_chain(g, p, rule)?;
    let (b0, t0) = solve_adjoint_iterative(&chain)?;
    let mis = mis_size_with_limit(g, EXACT_LIMIT)?;
    let mut absorbers = BTreeMap::new();
    let (mut p_mis, mut p_other) = (0.0, 0.0);
    for (j, &s) in chain.absorbing.iter().enumerate() {
        if s.count_ones() as usize == mis {
            p_mis += b0[j];
        } else {
            p_other += b0[j];
        }
        absorbers.insert(Config::from_index(s, g.n()), b0[j]);
    }
    Ok(AbsorptionReport {
        p,
        rule,
        absorbers,
        p_mis,
        p_mis_complement: p_other,
        expected_steps: t0,
        transient_states: chain.transient.len(),
        method: SolveMethod::Bicgstab,
    })
}

/// Printed rational function for the four-vertex instance,
/// `(p^3 q + 2p^2 q^2 + 3p q^3) / (p^3 q + 2p^2 q^2 + 4p q^3)`.
pub fn closed_form_4node(p: f64) -> f64 {
    let q = 1.0 - p;
    let num = p.powi(3) * q + 2.0 * p * p * q * q + 3.0 * p * q.powi(3);
    let den = p.powi(3) * q + 2.0 * p * p * q * q + 4.0 * p * q.powi(3);
    num / den
}

/// Rational function for the four-vertex instance under the local rule.
/// Differs from [`closed_form_4node`] by the `p^3 q^2` weight of the route
/// 0000 -> 0011 -> 1000.
pub fn closed_form_4node_local(p: f64) -> f64 {
    let q = 1.0 - p;
    let extra = p.powi(3) * q * q;
    let num = p.powi(3) * q + 2.0 * p * p * q * q + 3.0 * p * q.powi(3) + extra;
    let den = p.powi(3) * q + 2.0 * p * p * q * q + 4.0 * p * q.powi(3) + extra;
    num / den
}

/// Printed series expression for the seven-vertex house instance.
pub fn closed_form_house(p: f64) -> f64 {
    let q = 1.0 - p;
    let g1 = p.powi(7)
        + 7.0 * p.powi(6) * q
        + 18.0 * p.powi(5) * q.powi(2)
        + 22.0 * p.powi(4) * q.powi(3)
        + 13.0 * p.powi(3) * q.powi(4)
        + 10.0 * p.powi(2) * q.powi(5)
        + q.powi(7);
    let g2 = p.powi(4) + 3.0 * p.powi(3) * q + 4.0 * p * p * q * q + q.powi(4);
    let g3 = p.powi(3) + 2.0 * p * p * q + q.powi(3);
    let d1 = 1.0 - g1;
    let d2 = 1.0 - g2;
    let d3 = 1.0 - g3;
    let pair = 2.0 * p * q / (1.0 - p * p - q * q);
    let a = p.powi(5) * q * q + 2.0 * p.powi(4) * q.powi(3) + 2.0 * p.powi(3) * q.powi(4) + p * q.powi(6);
    let b = p.powi(4) * q.powi(3) + 2.0 * p.powi(3) * q.powi(4) + p * q.powi(6);
    2.0 * p.powi(3) * q.powi(4) / d1
        + 2.0 * a / d1 * (2.0 * p * q.powi(3)) / d2
        + 2.0 * a / d1 * (p.powi(3) * q + p * q.powi(3)) / d2 * pair
        + 2.0 * b / d1 * (p * p * q) / d3
        + (p.powi(4) * q.powi(3) + p * p * q.powi(5)) / d1 * pair
        + 2.0 * b / d1 * (2.0 * p * q * q) / d3
        + 4.0 * p * p * q.powi(5) / d1
}

/// Coefficients of the one-loop return polynomial: configurations of each
/// cardinality that lead back to 00..0 with probability 1, with 00..0
/// itself included.
pub fn zero_return_counts(g: &Graph, rule: UpdateRule) -> Result<Vec<usize>> {
    check_exact(g)?;
    let mut counts = vec![0usize; g.n() + 1];
    for s in 0..1u64 << g.n() {
        if s == 0 || split_update(g, s, rule) == (0, 0) {
            counts[s.count_ones() as usize] += 1;
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{four_node, house};
    use crate::graph::{enumerate_maximal_sets, gen_random_graph, Graph};

    fn c(s: &str) -> Config {
        s.parse().unwrap()
    }

    #[test]
    fn theta_cases() {
        let g = four_node();
        assert_eq!(local_theta(&g, 1, &[false, true, false], false, 0.3).unwrap(), [1.0, 0.0]);
        assert_eq!(local_theta(&g, 0, &[false], true, 0.3).unwrap(), [0.0, 1.0]);
        assert_eq!(local_theta(&g, 0, &[false], false, 0.99).unwrap(), [1.0 - 0.99, 0.99]);
        assert!(local_theta(&g, 1, &[false], false, 0.5).is_err());
    }

    #[test]
    fn rows_match_transition_table() {
        let g = four_node();
        let p = 0.3;
        let q = 0.7;
        let r = transition_row(&g, &c("1000"), p).unwrap();
        assert_eq!(r.successors.len(), 4);
        assert!((r.prob(&c("1011")) - p * p).abs() < 1e-15);
        assert!((r.prob(&c("1010")) - p * q).abs() < 1e-15);
        assert!((r.prob(&c("1001")) - p * q).abs() < 1e-15);
        assert!((r.prob(&c("1000")) - q * q).abs() < 1e-15);

        let r0 = transition_row(&g, &c("0000"), p).unwrap();
        assert_eq!(r0.successors.len(), 16);
        for (s, w) in &r0.successors {
            let k = s.count_ones() as i32;
            assert!((w - p.powi(k) * q.powi(4 - k)).abs() < 1e-15);
        }
        let r = transition_row(&g, &c("0110"), p).unwrap();
        assert_eq!(r.successors.len(), 1);
        assert_eq!(r.prob(&c("0000")), 1.0);
        let r = transition_row(&g, &c("1010"), p).unwrap();
        assert_eq!(r.successors.into_iter().collect::<Vec<_>>(), vec![(c("1010"), 1.0)]);
    }

    #[test]
    fn rule_difference_is_row_0011() {
        let g = four_node();
        let p = 0.4;
        let local = transition_row_with(&g, &c("0011"), p, UpdateRule::Local).unwrap();
        assert!((local.prob(&c("1000")) - p).abs() < 1e-15);
        let cf = transition_row_with(&g, &c("0011"), p, UpdateRule::ConflictFirst).unwrap();
        assert_eq!(cf.prob(&c("0000")), 1.0);
        let cf = transition_row_with(&g, &c("1011"), p, UpdateRule::ConflictFirst).unwrap();
        assert_eq!(cf.prob(&c("1000")), 1.0);
    }

    #[test]
    fn four_node_exact_values() {
        let g = four_node();
        let r = absorption_analysis(&g, 0.5).unwrap();
        assert!((r.p_mis - 13.0 / 15.0).abs() < 1e-12);
        assert!((closed_form_4node_local(0.5) - 13.0 / 15.0).abs() < 1e-15);
        assert!((closed_form_4node(0.5) - 6.0 / 7.0).abs() < 1e-15);
        let keys: Vec<String> = r.absorbers.keys().map(|k| k.to_string()).collect();
        assert_eq!(keys, ["0100", "1001", "1010"]);
        for p in [0.3, 0.5, 0.7, 0.9, 0.99] {
            let local = absorption_analysis(&g, p).unwrap();
            assert!((local.p_mis - closed_form_4node_local(p)).abs() < 1e-10);
            assert!((local.p_mis + local.p_mis_complement - 1.0).abs() < 1e-9);
            let cf = absorption_analysis_with(&g, p, UpdateRule::ConflictFirst).unwrap();
            assert!((cf.p_mis - closed_form_4node(p)).abs() < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn four_node_expected_steps() {
        // Exact rational solve of the transient system at p = 1/2.
        let r = absorption_analysis(&four_node(), 0.5).unwrap();
        assert!((r.expected_steps - 4.7).abs() < 1e-12);
        let alt = absorption_from_adjoint(&four_node(), 0.5, UpdateRule::Local).unwrap();
        assert!((alt.expected_steps - 4.7).abs() < 1e-9);
    }

    #[test]
    fn refuses_boundary_p_and_large_graphs() {
        let g = four_node();
        assert!(absorption_analysis(&g, 0.0).is_err());
        assert!(absorption_analysis(&g, 1.0).is_err());
        let big = crate::graph::gen_open_chain(21).unwrap();
        assert!(matches!(
            absorption_analysis(&big, 0.5),
            Err(Error::TooLarge { limit: 20, .. })
        ));
    }

    #[test]
    fn absorbing_states_are_maximal_sets() {
        for seed in 0..30 {
            let n = 3 + (seed as usize % 8);
            let g = gen_random_graph(n, 2.0_f64.min((n - 1) as f64), seed).unwrap();
            for rule in [UpdateRule::Local, UpdateRule::ConflictFirst] {
                assert_eq!(absorbing_states(&g, rule).unwrap(), enumerate_maximal_sets(&g).unwrap());
            }
        }
    }

    #[test]
    fn dense_and_adjoint_routes_agree() {
        for seed in 0..5 {
            let g = gen_random_graph(8, 2.0, 100 + seed).unwrap();
            let a = absorption_analysis(&g, 0.6).unwrap();
            let b = absorption_from_adjoint(&g, 0.6, UpdateRule::Local).unwrap();
            assert!((a.p_mis - b.p_mis).abs() < 1e-9);
            assert!((a.expected_steps - b.expected_steps).abs() < 1e-8);
            for (k, v) in &a.absorbers {
                assert!((v - b.absorbers[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn house_fixture_validation() {
        let h = house();
        let counts = zero_return_counts(&h, UpdateRule::ConflictFirst).unwrap();
        assert_eq!(counts, vec![1, 0, 10, 13, 22, 18, 7, 1]);
        assert_eq!(counts.iter().sum::<usize>(), 72);
        for rule in [UpdateRule::Local, UpdateRule::ConflictFirst] {
            let r = absorption_analysis_with(&h, 0.999, rule).unwrap();
            assert!((r.p_mis - 2.0 / 3.0).abs() < 1e-3, "{rule:?}: {}", r.p_mis);
        }
        assert!((closed_form_house(0.999) - 2.0 / 3.0).abs() < 2e-3);
    }

    #[test]
    fn isolated_vertices_absorb_immediately() {
        let g = Graph::edgeless(3).unwrap();
        let r = absorption_analysis(&g, 0.5).unwrap();
        assert_eq!(r.p_mis, 1.0);
        // Maximum of three geometric(1/2) waiting times: 6 - 4 + 8/7.
        assert!((r.expected_steps - 22.0 / 7.0).abs() < 1e-12);
    }
}
