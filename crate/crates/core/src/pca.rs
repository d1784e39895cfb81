//! Monte-Carlo simulation of the synchronous automaton.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{classify_with, mis_size, Config, Graph, IndependenceClass, ENUMERATION_LIMIT};
use crate::markov::{split_update, UpdateRule};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaParams {
    pub p: f64,
    pub seed: u64,
    pub max_steps: u64,
    #[serde(default)]
    pub rule: UpdateRule,
    /// Diagnostic override of the all-zero start.
    #[serde(default)]
    pub start: Option<Config>,
}

impl PcaParams {
    pub fn new(p: f64, seed: u64) -> Self {
        Self {
            p,
            seed,
            max_steps: DEFAULT_MAX_STEPS,
            rule: UpdateRule::Local,
            start: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {}", self.p)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub final_config: Config,
    pub steps: u64,
    pub absorbed: bool,
    /// `None` when the graph is too large for the exact maximum-set size.
    pub class: Option<IndependenceClass>,
}

/// One synchronous update; every site reads `c`.
pub fn pca_step<R: Rng + ?Sized>(g: &Graph, c: &Config, params: &PcaParams, rng: &mut R) -> Result<Config> {
    if c.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: c.len(),
        });
    }
    params.validate()?;
    Ok(step_bits(g, c, params.p, params.rule, rng))
}

/// Deterministic part and coin-flipping sites for arbitrary `n`.
fn split_bits(g: &Graph, c: &Config, rule: UpdateRule) -> (Vec<bool>, Vec<usize>) {
    let n = g.n();
    let blocked = |i: usize| g.neighbors(i).iter().any(|&j| c.get(j));
    match rule {
        UpdateRule::Local => {
            let mut base = vec![false; n];
            let mut free = Vec::new();
            for i in 0..n {
                if blocked(i) {
                    continue;
                }
                if c.get(i) {
                    base[i] = true;
                } else {
                    free.push(i);
                }
            }
            (base, free)
        }
        UpdateRule::ConflictFirst => {
            let conflicted: Vec<bool> = (0..n).map(|i| c.get(i) && blocked(i)).collect();
            if conflicted.iter().any(|&x| x) {
                let base = (0..n).map(|i| c.get(i) && !conflicted[i]).collect();
                return (base, Vec::new());
            }
            let free = (0..n).filter(|&i| !c.get(i) && !blocked(i)).collect();
            (c.bits().to_vec(), free)
        }
    }
}

fn step_bits<R: Rng + ?Sized>(g: &Graph, c: &Config, p: f64, rule: UpdateRule, rng: &mut R) -> Config {
    let (mut base, free) = split_bits(g, c, rule);
    for i in free {
        base[i] = rng.random_bool(p);
    }
    Config::from_bits(base)
}

/// Word-sized variant; draws coins in the same order as `step_bits`.
fn step_word<R: Rng + ?Sized>(g: &Graph, s: u64, p: f64, rule: UpdateRule, rng: &mut R) -> u64 {
    let (mut base, mut free) = split_update(g, s, rule);
    while free != 0 {
        let i = free.trailing_zeros();
        free &= free - 1;
        if rng.random_bool(p) {
            base |= 1 << i;
        }
    }
    base
}

fn is_absorbing_bits(g: &Graph, c: &Config, rule: UpdateRule) -> bool {
    let (base, free) = split_bits(g, c, rule);
    free.is_empty() && base == c.bits()
}

fn exact_mis(g: &Graph) -> Option<usize> {
    (g.n() <= ENUMERATION_LIMIT).then(|| mis_size(g).ok()).flatten()
}

/// Iterates from the start configuration until a maximal independent set is
/// reached or the step budget runs out.
pub fn run_to_absorption(g: &Graph, params: &PcaParams) -> Result<RunResult> {
    params.validate()?;
    run_with_mis(g, params, exact_mis(g))
}

fn run_with_mis(g: &Graph, params: &PcaParams, mis: Option<usize>) -> Result<RunResult> {
    let start = match &params.start {
        Some(c) if c.len() != g.n() => {
            return Err(Error::LengthMismatch {
                expected: g.n(),
                got: c.len(),
            })
        }
        Some(c) => c.clone(),
        None => Config::zeros(g.n()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let deterministic = params.p == 0.0 || params.p == 1.0;
    let (final_config, steps, absorbed) = if g.fits_in_word() {
        let absorbing = |s: u64| split_update(g, s, params.rule) == (s, 0);
        let mut s = start.index();
        let mut steps = 0u64;
        let mut seen: HashMap<u64, u64> = HashMap::new();
        while !absorbing(s) && steps < params.max_steps {
            if deterministic {
                // Coins are constant, so a repeated state means a cycle that
                // never absorbs; jump to the budget.
                if let Some(&first) = seen.get(&s) {
                    let period = steps - first;
                    let remaining = (params.max_steps - steps) % period;
                    for _ in 0..remaining {
                        s = step_word(g, s, params.p, params.rule, &mut rng);
                    }
                    steps = params.max_steps;
                    break;
                }
                seen.insert(s, steps);
            }
            s = step_word(g, s, params.p, params.rule, &mut rng);
            steps += 1;
        }
        (Config::from_index(s, g.n()), steps, absorbing(s))
    } else {
        let mut c = start;
        let mut steps = 0u64;
        let mut seen: HashMap<Config, u64> = HashMap::new();
        while !is_absorbing_bits(g, &c, params.rule) && steps < params.max_steps {
            if deterministic {
                if let Some(&first) = seen.get(&c) {
                    let period = steps - first;
                    let remaining = (params.max_steps - steps) % period;
                    for _ in 0..remaining {
                        c = step_bits(g, &c, params.p, params.rule, &mut rng);
                    }
                    steps = params.max_steps;
                    break;
                }
                seen.insert(c.clone(), steps);
            }
            c = step_bits(g, &c, params.p, params.rule, &mut rng);
            steps += 1;
        }
        let absorbed = is_absorbing_bits(g, &c, params.rule);
        (c, steps, absorbed)
    };
    let class = match mis {
        Some(m) => Some(classify_with(g, &final_config, m)?),
        None => None,
    };
    Ok(RunResult {
        final_config,
        steps,
        absorbed,
        class,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub runs: u64,
    pub absorbed: u64,
    pub unabsorbed: u64,
    /// Absorbed runs that ended in a maximum independent set.
    pub maximum: u64,
    /// Maximum-class fraction among absorbed runs; `None` when nothing was
    /// absorbed or the maximum size is unknown.
    pub p_mis_hat: Option<f64>,
    /// Step moments over absorbed runs.
    pub mean_steps: Option<f64>,
    pub var_steps: Option<f64>,
}

impl EnsembleStats {
    /// Binomial standard error of `p_mis_hat`.
    pub fn sigma(&self) -> Option<f64> {
        let p = self.p_mis_hat?;
        Some((p * (1.0 - p) / self.absorbed as f64).sqrt())
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    absorbed: u64,
    maximum: u64,
    sum: u128,
    sum_sq: u128,
}

impl Tally {
    fn merge(self, o: Self) -> Self {
        Self {
            absorbed: self.absorbed + o.absorbed,
            maximum: self.maximum + o.maximum,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }
}

pub fn estimate_ensemble(g: &Graph, p: f64, runs: u64, base_seed: u64) -> Result<EnsembleStats> {
    let mut params = PcaParams::new(p, base_seed);
    params.max_steps = DEFAULT_MAX_STEPS;
    estimate_ensemble_with(g, &params, runs)
}

/// Runs `runs` independent simulations with seeds `params.seed + i`.
/// Integer accumulation keeps the result independent of thread scheduling.
pub fn estimate_ensemble_with(g: &Graph, params: &PcaParams, runs: u64) -> Result<EnsembleStats> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    params.validate()?;
    let mis = exact_mis(g);
    let tally = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut pi = params.clone();
            pi.seed = params.seed.wrapping_add(i);
            let r = run_with_mis(g, &pi, mis)?;
            if !r.absorbed {
                return Ok::<_, Error>(Tally::default());
            }
            Ok(Tally {
                absorbed: 1,
                maximum: u64::from(r.class == Some(IndependenceClass::Maximum)),
                sum: r.steps as u128,
                sum_sq: (r.steps as u128).pow(2),
            })
        })
        .try_reduce(Tally::default, |a, b| Ok::<_, Error>(a.merge(b)))?;
    let a = tally.absorbed;
    let mean = (a > 0).then(|| tally.sum as f64 / a as f64);
    let var = (a > 1).then(|| {
        let n = a as f64;
        // Exact integer numerator: a * sum_sq - sum^2.
        let num = a as u128 * tally.sum_sq - tally.sum * tally.sum;
        num as f64 / (n * (n - 1.0))
    });
    Ok(EnsembleStats {
        runs,
        absorbed: a,
        unabsorbed: runs - a,
        maximum: tally.maximum,
        p_mis_hat: (a > 0 && mis.is_some()).then(|| tally.maximum as f64 / a as f64),
        mean_steps: mean,
        var_steps: var.or(if a == 1 { Some(0.0) } else { None }),
    })
}

/// Seed stream for grid point `j`.
pub fn point_seed(base_seed: u64, j: usize) -> u64 {
    base_seed ^ (j as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn sweep_p(g: &Graph, p_grid: &[f64], runs: u64, base_seed: u64) -> Result<Vec<(f64, EnsembleStats)>> {
    for &p in p_grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {p}")));
        }
    }
    p_grid
        .iter()
        .enumerate()
        .map(|(j, &p)| Ok((p, estimate_ensemble(g, p, runs, point_seed(base_seed, j))?)))
        .collect()
}
