//! Dissipative and unitary stages.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::DensityVec;
use super::integrate::{Dopri5, Tolerance};
use super::ops::{JumpOperatorSet, PxpHamiltonian};
use crate::error::{Error, Result};

/// Checkpoint spacing of the stationarity test.
pub const CHECKPOINT_DT: f64 = 0.01;
/// Default stationarity threshold.
pub const DEFAULT_TOL: f64 = 1e-5;
/// Off-diagonal mass below which the classical master equation is used.
pub const DIAGONAL_THRESHOLD: f64 = 1e-12;
const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Result of a finite-time dissipative stage.
#[derive(Clone, Debug)]
pub struct Relaxation<S> {
    pub state: S,
    /// Elapsed time at which the criterion fired, or the time limit.
    pub elapsed: f64,
    pub converged: bool,
}

/// Stationarity test between consecutive checkpoints.
///
/// Fires when `|1 - |<<r0|r1>>| / <<r0|r0>>| < tol` and, as a guard against
/// stalls at a purity minimum, `||r1 - r0|| / ||r0|| < sqrt(tol)`. The outer
/// absolute value keeps growing purity from passing as convergence.
pub fn stationarity_reached(self_overlap: f64, cross: f64, diff_norm: f64, tol: f64) -> bool {
    let measure = 1.0 - cross.abs() / self_overlap;
    measure.abs() < tol && diff_norm / self_overlap.sqrt() < tol.sqrt()
}

/// `drho/dt` for `H = 0`, matrix-free, column-major slices.
pub fn lindblad_rhs(ops: &JumpOperatorSet, rho: &[Complex64], out: &mut [Complex64]) {
    let d = ops.space().dim();
    let gamma: Vec<f64> = (0..d).map(|a| ops.gamma(a)).collect();
    out.par_chunks_mut(d).enumerate().for_each(|(b, col)| {
        let src_b = ops.sources(b);
        for (a, o) in col.iter_mut().enumerate() {
            let mut acc = rho[a + b * d] * (-0.5 * (gamma[a] + gamma[b]));
            if !src_b.is_empty() {
                // Inflow from (l^-1(a), l^-1(b)) for operators with both preimages.
                let src_a = ops.sources(a);
                let (mut i, mut j) = (0, 0);
                while i < src_a.len() && j < src_b.len() {
                    match src_a[i].0.cmp(&src_b[j].0) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            acc += rho[src_a[i].1 + src_b[j].1 * d];
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
            *o = acc;
        }
    });
}

/// Classical master equation on populations.
pub fn rate_rhs(ops: &JumpOperatorSet, pop: &[f64], out: &mut [f64]) {
    out.par_iter_mut().enumerate().for_each(|(a, o)| {
        let inflow: f64 = ops.sources(a).iter().map(|&(_, s)| pop[s]).sum();
        *o = inflow - ops.gamma(a) * pop[a];
    });
}

fn check_ops(rho: &DensityVec, ops: &JumpOperatorSet) -> Result<()> {
    if rho.space().states() != ops.space().states() {
        return Err(Error::Dimension("state and operators live on different bases".into()));
    }
    Ok(())
}

fn check_trace(tr: f64) -> Result<()> {
    if (tr - 1.0).abs() > TRACE_DRIFT_LIMIT {
        return Err(Error::Integrator(format!("trace drifted to {tr:.12}")));
    }
    Ok(())
}

fn validate_stage(t_max: f64, tol: f64) -> Result<()> {
    if !(t_max > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need t_max > 0 and tol > 0 (got {t_max}, {tol})"
        )));
    }
    Ok(())
}

/// Integrates the dissipator with checkpoints every [`CHECKPOINT_DT`] until
/// the stationarity test fires or `t_max` is reached. Diagonal inputs take
/// the classical fast path.
pub fn dissipative_evolve(
    rho: &DensityVec,
    ops: &JumpOperatorSet,
    t_max: f64,
    tol: f64,
) -> Result<Relaxation<DensityVec>> {
    check_ops(rho, ops)?;
    validate_stage(t_max, tol)?;
    if rho.off_diagonal_mass() < DIAGONAL_THRESHOLD {
        let r = dissipative_evolve_diagonal(&rho.populations(), ops, t_max, tol)?;
        return Ok(Relaxation {
            state: DensityVec::from_populations(rho.space().clone(), &r.state)?,
            elapsed: r.elapsed,
            converged: r.converged,
        });
    }
    dissipative_evolve_full(rho, ops, t_max, tol)
}

/// Full evolution regardless of the diagonal shortcut.
pub fn dissipative_evolve_full(
    rho: &DensityVec,
    ops: &JumpOperatorSet,
    t_max: f64,
    tol: f64,
) -> Result<Relaxation<DensityVec>> {
    check_ops(rho, ops)?;
    validate_stage(t_max, tol)?;
    let d = rho.dim();
    let f = |x: &[Complex64], y: &mut [Complex64]| lindblad_rhs(ops, x, y);
    let mut solver = Dopri5::new(d * d, Tolerance::default());
    let mut y = rho.as_vec().to_vec();
    let overlap = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.par_iter().zip(b.par_iter()).map(|(x, y)| x.conj() * y).sum() };
    let (t, converged) = checkpoint_loop(
        &mut solver,
        &f,
        &mut y,
        t_max,
        tol,
        |a, b| overlap(a, b).norm(),
        |a| overlap(a, a).re,
        |a, b| a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt(),
        |y| (0..d).map(|a| y[a + a * d].re).sum(),
    )?;
    let state = DensityVec::from_matrix(rho.space().clone(), DMatrix::from_vec(d, d, y))?;
    Ok(Relaxation {
        state,
        elapsed: t,
        converged,
    })
}

/// Populations-only variant of [`dissipative_evolve`].
pub fn dissipative_evolve_diagonal(
    pop: &[f64],
    ops: &JumpOperatorSet,
    t_max: f64,
    tol: f64,
) -> Result<Relaxation<Vec<f64>>> {
    let d = ops.space().dim();
    if pop.len() != d {
        return Err(Error::Dimension(format!("{} populations for dimension {d}", pop.len())));
    }
    validate_stage(t_max, tol)?;
    let f = |x: &[f64], y: &mut [f64]| rate_rhs(ops, x, y);
    let mut solver = Dopri5::new(d, Tolerance::default());
    let mut y = pop.to_vec();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (t, converged) = checkpoint_loop(
        &mut solver,
        &f,
        &mut y,
        t_max,
        tol,
        |a, b| dot(a, b).abs(),
        |a| dot(a, a),
        |a, b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
        |y| y.iter().sum(),
    )?;
    Ok(Relaxation {
        state: y,
        elapsed: t,
        converged,
    })
}

#[allow(clippy::too_many_arguments)]
fn checkpoint_loop<T, F>(
    solver: &mut Dopri5<T>,
    f: &F,
    y: &mut Vec<T>,
    t_max: f64,
    tol: f64,
    cross: impl Fn(&[T], &[T]) -> f64,
    self_overlap: impl Fn(&[T]) -> f64,
    diff: impl Fn(&[T], &[T]) -> f64,
    trace: impl Fn(&[T]) -> f64,
) -> Result<(f64, bool)>
where
    T: super::integrate::Elem,
    F: Fn(&[T], &mut [T]),
{
    let mut k = 0u64;
    loop {
        let t0 = k as f64 * CHECKPOINT_DT;
        let t1 = ((k + 1) as f64 * CHECKPOINT_DT).min(t_max);
        let prev = y.clone();
        solver.integrate(f, y, t0, t1)?;
        check_trace(trace(y))?;
        k += 1;
        if stationarity_reached(self_overlap(&prev), cross(&prev, y), diff(&prev, y), tol) {
            return Ok((t1, true));
        }
        if t1 >= t_max {
            return Ok((t1, false));
        }
    }
}

/// Evolves for a fixed duration `t` without a stationarity test.
pub fn dissipative_evolve_fixed(rho: &DensityVec, ops: &JumpOperatorSet, t: f64) -> Result<DensityVec> {
    check_ops(rho, ops)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("duration must be >= 0, got {t}")));
    }
    let d = rho.dim();
    if rho.off_diagonal_mass() < DIAGONAL_THRESHOLD {
        let f = |x: &[f64], y: &mut [f64]| rate_rhs(ops, x, y);
        let mut solver = Dopri5::new(d, Tolerance::default());
        let mut y = rho.populations();
        solver.integrate(&f, &mut y, 0.0, t)?;
        check_trace(y.iter().sum())?;
        return DensityVec::from_populations(rho.space().clone(), &y);
    }
    let f = |x: &[Complex64], y: &mut [Complex64]| lindblad_rhs(ops, x, y);
    let mut solver = Dopri5::new(d * d, Tolerance::default());
    let mut y = rho.as_vec().to_vec();
    solver.integrate(&f, &mut y, 0.0, t)?;
    check_trace((0..d).map(|a| y[a + a * d].re).sum())?;
    DensityVec::from_matrix(rho.space().clone(), DMatrix::from_vec(d, d, y))
}

/// Exact `t -> infinity` limit of the dissipator.
///
/// Every jump strictly increases the key (fewer conflicting edges, then more
/// active sites), so element `(a, b)` only feeds pairs of larger rank sum.
/// Sweeping rank sums upward, each pair with total rate `G = (g_a + g_b)/2`
/// hands `rho_ab / G` to `(l(a), l(b))` for every operator `l` acting on
/// both, then empties. Pairs with `G = 0` are stationary.
pub fn dissipative_steady(rho: &DensityVec, ops: &JumpOperatorSet, g: &crate::graph::Graph) -> Result<DensityVec> {
    check_ops(rho, ops)?;
    let space = rho.space();
    let d = space.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&a| {
        let s = space.state(a);
        (std::cmp::Reverse(g.conflict_edges_index(s)), s.count_ones(), s)
    });
    let mut w = rho.matrix().clone();
    for sum in 0..(2 * d).saturating_sub(1) {
        let lo = sum.saturating_sub(d - 1);
        let hi = sum.min(d - 1);
        for i in lo..=hi {
            let (a, b) = (order[i], order[sum - i]);
            let val = w[(a, b)];
            if val == Complex64::new(0.0, 0.0) {
                continue;
            }
            let rate = 0.5 * (ops.gamma(a) + ops.gamma(b));
            if rate == 0.0 {
                continue;
            }
            let share = val / rate;
            let (fa, fb) = (ops.actions(a), ops.actions(b));
            let (mut x, mut y) = (0, 0);
            while x < fa.len() && y < fb.len() {
                match fa[x].0.cmp(&fb[y].0) {
                    std::cmp::Ordering::Less => x += 1,
                    std::cmp::Ordering::Greater => y += 1,
                    std::cmp::Ordering::Equal => {
                        w[(fa[x].1, fb[y].1)] += share;
                        x += 1;
                        y += 1;
                    }
                }
            }
            w[(a, b)] = Complex64::new(0.0, 0.0);
        }
    }
    let out = DensityVec::from_matrix(space.clone(), w)?;
    check_trace(out.trace().re - rho.trace().re + 1.0)?;
    Ok(out)
}

/// `exp(-i tau H) x` by a truncated Taylor series over substeps.
fn expm_apply(h: &PxpHamiltonian, tau: f64, x: &mut [Complex64]) -> Result<()> {
    let norm = h.norm_bound();
    if tau == 0.0 || norm == 0.0 {
        return Ok(());
    }
    let substeps = (tau.abs() * norm / 0.5).ceil().max(1.0) as usize;
    let dt = tau / substeps as f64;
    let d = x.len();
    let mut term = vec![Complex64::new(0.0, 0.0); d];
    let mut next = vec![Complex64::new(0.0, 0.0); d];
    let x_norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for _ in 0..substeps {
        term.copy_from_slice(x);
        let mut converged = false;
        for k in 1..=40 {
            h.mul_vec(&term, &mut next);
            let c = Complex64::new(0.0, -dt / k as f64);
            let mut tn = 0.0;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * c;
                tn += t.norm_sqr();
            }
            for (xi, t) in x.iter_mut().zip(&term) {
                *xi += t;
            }
            if tn.sqrt() <= 1e-17 * x_norm.max(1e-300) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Integrator("Taylor series for exp(-i theta H) did not converge".into()));
        }
    }
    Ok(())
}

/// `rho <- U rho U^dag` with `U = exp(-i theta H)`.
pub fn unitary_step(rho: &DensityVec, h: &PxpHamiltonian, theta: f64) -> Result<DensityVec> {
    if rho.space().states() != h.space().states() {
        return Err(Error::Dimension("state and Hamiltonian live on different bases".into()));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("theta must be finite, got {theta}")));
    }
    if theta == 0.0 {
        return Ok(rho.clone());
    }
    let d = rho.dim();
    let apply_cols = |m: &mut DMatrix<Complex64>| -> Result<()> {
        m.as_mut_slice()
            .par_chunks_mut(d)
            .map(|col| expm_apply(h, theta, col))
            .collect::<Result<Vec<()>>>()?;
        Ok(())
    };
    let mut m = rho.matrix().clone();
    apply_cols(&mut m)?;
    let mut m = m.adjoint();
    apply_cols(&mut m)?;
    let out = DensityVec::from_matrix(rho.space().clone(), m.adjoint())?;
    let drift = (out.trace() - rho.trace()).norm();
    if drift > 1e-8 {
        return Err(Error::Integrator(format!("unitary step changed the trace by {drift:.3e}")));
    }
    Ok(out)
}

/// Dissipative stage duration policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StagePolicy {
    /// Integrate until the stationarity test fires.
    Criterion { tol: f64, t_max: f64 },
    /// Integrate for a fixed time.
    Fixed { t: f64 },
    /// Exact infinite-time limit.
    Steady,
}

impl Default for StagePolicy {
    fn default() -> Self {
        StagePolicy::Steady
    }
}

impl StagePolicy {
    pub fn criterion() -> Self {
        StagePolicy::Criterion {
            tol: DEFAULT_TOL,
            t_max: 1e4,
        }
    }

    pub fn label(&self) -> String {
        match self {
            StagePolicy::Criterion { tol, .. } => format!("criterion:{tol:e}"),
            StagePolicy::Fixed { t } => format!("fixed:{t}"),
            StagePolicy::Steady => "steady".into(),
        }
    }
}

impl std::str::FromStr for StagePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown stage policy {s:?} (steady, criterion[:TOL], fixed:T)"));
        if s == "steady" {
            return Ok(StagePolicy::Steady);
        }
        if s == "criterion" {
            return Ok(StagePolicy::criterion());
        }
        if let Some(v) = s.strip_prefix("criterion:") {
            let tol: f64 = v.parse().map_err(|_| bad())?;
            if !(tol > 0.0) {
                return Err(bad());
            }
            return Ok(StagePolicy::Criterion { tol, t_max: 1e4 });
        }
        if let Some(v) = s.strip_prefix("fixed:") {
            let t: f64 = v.parse().map_err(|_| bad())?;
            if !(t > 0.0) {
                return Err(bad());
            }
            return Ok(StagePolicy::Fixed { t });
        }
        Err(bad())
    }
}

/// Outcome of one dissipative stage under a policy.
pub struct Stage {
    pub state: DensityVec,
    pub elapsed: Option<f64>,
    pub converged: bool,
}

pub fn run_stage(
    rho: &DensityVec,
    ops: &JumpOperatorSet,
    g: &crate::graph::Graph,
    policy: StagePolicy,
) -> Result<Stage> {
    match policy {
        StagePolicy::Criterion { tol, t_max } => {
            let r = dissipative_evolve(rho, ops, t_max, tol)?;
            Ok(Stage {
                state: r.state,
                elapsed: Some(r.elapsed),
                converged: r.converged,
            })
        }
        StagePolicy::Fixed { t } => Ok(Stage {
            state: dissipative_evolve_fixed(rho, ops, t)?,
            elapsed: Some(t),
            converged: true,
        }),
        StagePolicy::Steady => Ok(Stage {
            state: dissipative_steady(rho, ops, g)?,
            elapsed: None,
            converged: true,
        }),
    }
}
