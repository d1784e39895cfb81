use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::space::Space;
use crate::error::Result;
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKind {
    On,
    Off,
}

/// Identity of one jump operator. `mask` is the required neighborhood
/// pattern, bit `k` standing for `g.neighbors(vertex)[k]`; zero for `On`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JumpTag {
    pub vertex: usize,
    pub kind: JumpKind,
    pub mask: u64,
}

/// Constraint-projected raising and lowering operators with unit rates.
/// Each operator maps basis states to basis states with amplitude 1, so it
/// is stored as a partial map.
#[derive(Clone, Debug)]
pub struct JumpOperatorSet {
    space: Arc<Space>,
    tags: Vec<JumpTag>,
    /// Per basis index: (op id, target index), sorted by op id.
    forward: Vec<Vec<(usize, usize)>>,
    /// Per basis index: (op id, source index), sorted by op id.
    backward: Vec<Vec<(usize, usize)>>,
}

fn neighborhood_pattern(g: &Graph, i: usize, s: u64) -> u64 {
    g.neighbors(i)
        .iter()
        .enumerate()
        .fold(0u64, |m, (k, &j)| m | ((s >> j & 1) << k))
}

pub fn build_jump_operators(g: &Graph, space: Arc<Space>) -> Result<JumpOperatorSet> {
    let mut tags = Vec::new();
    let mut offset = Vec::with_capacity(g.n());
    for i in 0..g.n() {
        offset.push(tags.len());
        tags.push(JumpTag {
            vertex: i,
            kind: JumpKind::On,
            mask: 0,
        });
        for c in 1..1u64 << g.degree(i) {
            tags.push(JumpTag {
                vertex: i,
                kind: JumpKind::Off,
                mask: c,
            });
        }
    }
    let d = space.dim();
    let mut forward = vec![Vec::new(); d];
    let mut backward = vec![Vec::new(); d];
    for (a, fwd) in forward.iter_mut().enumerate() {
        let s = space.state(a);
        for i in 0..g.n() {
            let pattern = neighborhood_pattern(g, i, s);
            let bit = 1u64 << i;
            let (op, t) = match (s & bit != 0, pattern) {
                (false, 0) => (offset[i], s | bit),
                (true, c) if c != 0 => (offset[i] + c as usize, s & !bit),
                _ => continue,
            };
            if let Some(b) = space.find(t) {
                fwd.push((op, b));
            }
        }
        fwd.sort_unstable();
    }
    for (a, fwd) in forward.iter().enumerate() {
        for &(op, b) in fwd {
            backward[b].push((op, a));
        }
    }
    for bwd in &mut backward {
        bwd.sort_unstable();
    }
    Ok(JumpOperatorSet {
        space,
        tags,
        forward,
        backward,
    })
}

impl JumpOperatorSet {
    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[JumpTag] {
        &self.tags
    }

    /// Operators acting nontrivially on basis index `a`, with targets.
    pub fn actions(&self, a: usize) -> &[(usize, usize)] {
        &self.forward[a]
    }

    /// Preimages of basis index `b`.
    pub fn sources(&self, b: usize) -> &[(usize, usize)] {
        &self.backward[b]
    }

    /// `L_op |a>` as a basis index, if nonzero.
    pub fn apply(&self, op: usize, a: usize) -> Option<usize> {
        self.forward[a]
            .binary_search_by_key(&op, |&(o, _)| o)
            .ok()
            .map(|k| self.forward[a][k].1)
    }

    /// Total decay rate `<a| sum_l L_l^dag L_l |a>`.
    pub fn gamma(&self, a: usize) -> f64 {
        self.forward[a].len() as f64
    }
}

/// Hamiltonian `sum_i (prod_{j in N_i} P0_j) X_i` restricted to a basis.
#[derive(Clone, Debug)]
pub struct PxpHamiltonian {
    space: Arc<Space>,
    /// Per row: (column, flipped vertex); every element equals 1.
    rows: Vec<Vec<(usize, usize)>>,
}

pub fn build_pxp(g: &Graph, space: Arc<Space>) -> Result<PxpHamiltonian> {
    let rows = (0..space.dim())
        .map(|a| {
            let s = space.state(a);
            let mut row: Vec<(usize, usize)> = (0..g.n())
                .filter(|&i| s & g.mask(i) == 0)
                .filter_map(|i| space.find(s ^ (1 << i)).map(|b| (b, i)))
                .collect();
            row.sort_unstable();
            row
        })
        .collect();
    Ok(PxpHamiltonian { space, rows })
}

impl PxpHamiltonian {
    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn row(&self, a: usize) -> &[(usize, usize)] {
        &self.rows[a]
    }

    pub fn element(&self, a: usize, b: usize) -> f64 {
        if self.rows[a].iter().any(|&(c, _)| c == b) {
            1.0
        } else {
            0.0
        }
    }

    /// Row-sum bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.rows.iter().map(Vec::len).max().unwrap_or(0) as f64
    }

    /// `y = H x`.
    pub fn mul_vec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (a, ya) in y.iter_mut().enumerate() {
            *ya = self.rows[a].iter().map(|&(b, _)| x[b]).sum();
        }
    }
}

/// Column-major Liouvillian superoperator as triplets `(row, col, value)`
/// over `vec(rho)`, with `vec(A rho B) = (B^T kron A) vec(rho)`. Includes
/// `-i theta [H, .]` when a Hamiltonian is given. Intended for small
/// cross-checks.
pub fn liouvillian_superop(
    ops: &JumpOperatorSet,
    h: Option<(&PxpHamiltonian, f64)>,
) -> Vec<(usize, usize, Complex64)> {
    let d = ops.space().dim();
    let idx = |a: usize, b: usize| a + b * d;
    let mut out = Vec::new();
    // L rho L^dag: (conj(L) kron L), entry ((l(a), l(b)), (a, b)).
    for a in 0..d {
        for b in 0..d {
            for &(op, ta) in ops.actions(a) {
                if let Some(tb) = ops.apply(op, b) {
                    out.push((idx(ta, tb), idx(a, b), Complex64::new(1.0, 0.0)));
                }
            }
            // -1/2 (I kron L^dag L) - 1/2 ((L^dag L)^T kron I); both diagonal.
            let g = -0.5 * (ops.gamma(a) + ops.gamma(b));
            if g != 0.0 {
                out.push((idx(a, b), idx(a, b), Complex64::new(g, 0.0)));
            }
        }
    }
    if let Some((h, theta)) = h {
        // -i theta (I kron H - H^T kron I); H is real symmetric.
        let mi = Complex64::new(0.0, -theta);
        for b in 0..d {
            for a in 0..d {
                for &(c, _) in h.row(a) {
                    out.push((idx(a, b), idx(c, b), mi));
                }
                for &(c, _) in h.row(b) {
                    out.push((idx(a, b), idx(a, c), -mi));
                }
            }
        }
    }
    out
}
