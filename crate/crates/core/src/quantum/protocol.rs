use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::density::DensityVec;
use super::evolve::{run_stage, unitary_step, StagePolicy};
use super::ops::{build_jump_operators, build_pxp};
use super::space::{Space, SpaceKind};
use crate::error::{Error, Result};
use crate::graph::{enumerate_maximal_sets, mis_size, Config, Graph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub theta: f64,
    pub r_max: usize,
    pub target: f64,
    /// Duration rule for every dissipative stage, including the first.
    pub policy: StagePolicy,
    pub space: SpaceKind,
    /// Stop at the first cycle with `p_mis > target`.
    pub stop_at_target: bool,
    /// Number of largest populations recorded per cycle.
    pub top_k: usize,
    /// Record the smallest eigenvalue of rho (costly; dimension <= 64 only).
    pub check_positivity: bool,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            theta: 0.1,
            r_max: 1000,
            target: 0.7,
            policy: StagePolicy::Steady,
            space: SpaceKind::Independent,
            stop_at_target: true,
            top_k: 5,
            check_positivity: false,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be >= 0, got {}", self.theta)));
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target must lie in (0, 1), got {}",
                self.target
            )));
        }
        match self.policy {
            StagePolicy::Criterion { tol, t_max } if !(tol > 0.0 && t_max > 0.0) => Err(
                Error::InvalidParameter(format!("criterion policy needs tol, t_max > 0 (got {tol}, {t_max})")),
            ),
            StagePolicy::Fixed { t } if !(t > 0.0) => {
                Err(Error::InvalidParameter(format!("stage duration must be > 0, got {t}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub r: usize,
    pub p_mis: f64,
    /// Population on all maximal independent sets.
    pub p_maximal_total: f64,
    /// Population on configurations violating an edge.
    pub p_not_independent: f64,
    pub top_populations: Vec<(Config, f64)>,
    /// Duration of the dissipative stage, if finite.
    pub stage_time: Option<f64>,
    pub stage_converged: bool,
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleTrace {
    pub n: usize,
    pub theta: f64,
    pub policy: StagePolicy,
    pub records: Vec<CycleRecord>,
    /// First cycle with `p_mis > target`.
    pub r_hit: Option<usize>,
}

impl CycleTrace {
    pub fn p_mis(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p_mis).collect()
    }

    pub fn final_p_mis(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.p_mis)
    }
}

/// Initial dissipative stage from the vacuum, then `r` alternations of the
/// unitary step and a dissipative stage, recording populations after each
/// dissipative stage.
pub fn run_protocol(g: &Graph, params: &ProtocolParams) -> Result<CycleTrace> {
    run_protocol_with(g, params, |_, _| {})
}

/// As [`run_protocol`], calling `observe` with every post-stage state.
pub fn run_protocol_with(
    g: &Graph,
    params: &ProtocolParams,
    mut observe: impl FnMut(usize, &DensityVec),
) -> Result<CycleTrace> {
    params.validate()?;
    let space = Arc::new(Space::new(g, params.space)?);
    let ops = build_jump_operators(g, space.clone())?;
    let h = build_pxp(g, space.clone())?;
    let mis = mis_size(g)?;
    let maximal: Vec<(usize, bool)> = enumerate_maximal_sets(g)?
        .iter()
        .filter_map(|c| space.find(c.index()).map(|a| (a, c.count_ones() == mis)))
        .collect();
    let violating: Vec<usize> = (0..space.dim())
        .filter(|&a| !g.is_independent_index(space.state(a)))
        .collect();

    let record = |r: usize, rho: &DensityVec, stage_time: Option<f64>, converged: bool| {
        let pops = rho.populations();
        let p_mis = maximal.iter().filter(|m| m.1).fold(0.0, |acc, m| acc + pops[m.0]);
        let p_maximal_total = maximal.iter().fold(0.0, |acc, m| acc + pops[m.0]);
        let p_not_independent = violating.iter().fold(0.0, |acc, &a| acc + pops[a]);
        let mut ranked: Vec<(usize, f64)> = pops.iter().copied().enumerate().collect();
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        let top_populations = ranked
            .into_iter()
            .take(params.top_k)
            .map(|(a, p)| (Config::from_index(space.state(a), g.n()), p))
            .collect();
        CycleRecord {
            r,
            p_mis,
            p_maximal_total,
            p_not_independent,
            top_populations,
            stage_time,
            stage_converged: converged,
            trace_error: (rho.trace().re - 1.0).abs().max(rho.trace().im.abs()),
            hermiticity_error: rho.hermiticity_error(),
            min_eigenvalue: (params.check_positivity && rho.dim() <= 64).then(|| rho.min_eigenvalue()),
        }
    };

    let mut rho = DensityVec::vacuum(space.clone());
    let stage = run_stage(&rho, &ops, g, params.policy)?;
    rho = stage.state;
    observe(0, &rho);
    let mut records = vec![record(0, &rho, stage.elapsed, stage.converged)];
    let mut r_hit = (records[0].p_mis > params.target).then_some(0);
    let mut r = 0;
    while r < params.r_max && !(params.stop_at_target && r_hit.is_some()) {
        r += 1;
        rho = unitary_step(&rho, &h, params.theta)?;
        let stage = run_stage(&rho, &ops, g, params.policy)?;
        rho = stage.state;
        observe(r, &rho);
        let rec = record(r, &rho, stage.elapsed, stage.converged);
        if r_hit.is_none() && rec.p_mis > params.target {
            r_hit = Some(r);
        }
        records.push(rec);
    }
    Ok(CycleTrace {
        n: g.n(),
        theta: params.theta,
        policy: params.policy,
        records,
        r_hit,
    })
}

/// Duration of the vacuum-started dissipative stage under the stationarity
/// test.
pub fn relaxation_time(g: &Graph, tol: f64, t_max: f64) -> Result<(f64, bool)> {
    let space = Arc::new(Space::new(g, SpaceKind::Independent)?);
    let ops = build_jump_operators(g, space.clone())?;
    let r = super::evolve::dissipative_evolve(&DensityVec::vacuum(space), &ops, t_max, tol)?;
    Ok((r.elapsed, r.converged))
}

/// Plateau value and cycles to reach a fraction of the rise toward it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauSummary {
    pub plateau: f64,
    pub cycles_to_plateau: Option<usize>,
}

/// Plateau as the final value of a run long enough to saturate; the cycle
/// count is the first `r` at which `p_mis` covers `fraction` of the rise.
pub fn plateau_summary(trace: &CycleTrace, fraction: f64) -> PlateauSummary {
    let p = trace.p_mis();
    let plateau = *p.last().unwrap_or(&0.0);
    let start = p.first().copied().unwrap_or(0.0);
    let level = start + fraction * (plateau - start);
    PlateauSummary {
        plateau,
        cycles_to_plateau: p.iter().position(|&x| x >= level),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_open_chain;

    #[test]
    fn chain3_initial_and_monotone() {
        let g = gen_open_chain(3).unwrap();
        let params = ProtocolParams {
            r_max: 30,
            stop_at_target: false,
            ..Default::default()
        };
        let tr = run_protocol(&g, &params).unwrap();
        assert!((tr.records[0].p_mis - 2.0 / 3.0).abs() < 1e-12);
        for w in tr.p_mis().windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn zero_angle_is_constant() {
        let g = gen_open_chain(3).unwrap();
        let params = ProtocolParams {
            theta: 0.0,
            r_max: 5,
            target: 0.9,
            ..Default::default()
        };
        let tr = run_protocol(&g, &params).unwrap();
        assert_eq!(tr.records.len(), 6);
        assert!(tr.p_mis().iter().all(|&p| (p - 2.0 / 3.0).abs() < 1e-12));
        assert_eq!(tr.r_hit, None);
    }

    #[test]
    fn full_and_subspace_agree() {
        let g = crate::fixtures::four_node();
        let base = ProtocolParams {
            theta: 0.3,
            r_max: 6,
            stop_at_target: false,
            ..Default::default()
        };
        let sub = run_protocol(&g, &base).unwrap();
        let full = run_protocol(
            &g,
            &ProtocolParams {
                space: SpaceKind::Full,
                ..base
            },
        )
        .unwrap();
        for (a, b) in sub.records.iter().zip(&full.records) {
            assert!((a.p_mis - b.p_mis).abs() < 1e-12);
            assert!(b.p_not_independent < 1e-14);
        }
    }

    #[test]
    fn stops_at_target() {
        let g = gen_open_chain(3).unwrap();
        let params = ProtocolParams {
            theta: 0.3,
            target: 0.7,
            ..Default::default()
        };
        let tr = run_protocol(&g, &params).unwrap();
        let hit = tr.r_hit.unwrap();
        assert_eq!(tr.records.len(), hit + 1);
        assert!(tr.final_p_mis() > 0.7);
        assert!(tr.records[hit - 1].p_mis <= 0.7);
    }

    #[test]
    fn rejects_bad_params() {
        let g = gen_open_chain(3).unwrap();
        for p in [
            ProtocolParams { target: 1.0, ..Default::default() },
            ProtocolParams { theta: -0.1, ..Default::default() },
            ProtocolParams { policy: StagePolicy::Fixed { t: 0.0 }, ..Default::default() },
        ] {
            assert!(run_protocol(&g, &p).is_err());
        }
        assert!(run_protocol(&gen_open_chain(15).unwrap(), &ProtocolParams::default()).is_err());
    }
}
