//! Seeded, resumable campaigns over graph ensembles.
//!
//! A campaign directory holds `cells/<key>.json` (one per grid cell),
//! `results.csv`, `fits.json`, `manifest.json` and, for relaxation
//! campaigns, `parity.csv`. Cells already on disk are reused, so rerunning a
//! finished campaign rewrites identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::{fit_cycles, fit_exponential, fit_power, fit_power_ratio, FitResult};
use crate::graph::{gen_open_chain, gen_random_graph, Graph};
use crate::markov::UpdateRule;
use crate::pca::{estimate_ensemble_with, PcaParams, DEFAULT_MAX_STEPS};
use crate::quantum::evolve::DEFAULT_TOL;
use crate::quantum::protocol::relaxation_time;
use crate::quantum::{run_protocol, ProtocolParams, SpaceKind, StagePolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ClassicalHeatmap,
    ClassicalPSweep,
    #[serde(rename = "classical_scaling_N")]
    ClassicalScalingN,
    ClassicalScalingK,
    QuantumRelaxation,
    QuantumCycles,
}

impl Mode {
    pub fn is_classical(self) -> bool {
        matches!(
            self,
            Mode::ClassicalHeatmap | Mode::ClassicalPSweep | Mode::ClassicalScalingN | Mode::ClassicalScalingK
        )
    }

    /// Whether the per-instance value is the MIS frequency (rather than a
    /// time or cycle count).
    fn measures_p_mis(self) -> bool {
        matches!(self, Mode::ClassicalHeatmap | Mode::ClassicalPSweep)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// `G(N, M)` with `M = round(N k / 2)`.
    #[default]
    Random,
    /// Open chain; `k` is ignored.
    Chain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSettings {
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default)]
    pub rule: UpdateRule,
}

fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}

impl Default for ClassicalSettings {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            rule: UpdateRule::Local,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSettings {
    /// Stationarity threshold for relaxation times.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    /// Stage policy for cycle campaigns, as accepted by [`StagePolicy`]'s parser.
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default = "default_space")]
    pub space: String,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_t_max() -> f64 {
    1e4
}
fn default_target() -> f64 {
    0.7
}
fn default_r_max() -> usize {
    5000
}
fn default_policy() -> String {
    "steady".into()
}
fn default_space() -> String {
    "independent".into()
}

impl Default for QuantumSettings {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            t_max: default_t_max(),
            target: default_target(),
            r_max: default_r_max(),
            policy: default_policy(),
            space: default_space(),
        }
    }
}

fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default = "one")]
    pub instances: usize,
    #[serde(default = "one_u64")]
    pub runs: u64,
    #[serde(default)]
    pub graph: GraphKind,
    /// Sizes, crossed with `k` unless `pairs` is given.
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub k: Vec<f64>,
    /// Explicit `(N, k)` cells.
    #[serde(default)]
    pub pairs: Vec<(usize, f64)>,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
    #[serde(default)]
    pub classical: ClassicalSettings,
    #[serde(default)]
    pub quantum: QuantumSettings,
    /// Reference values echoed next to the fits, e.g. `delta = "0.12(8)"`.
    #[serde(default)]
    pub reference: BTreeMap<String, String>,
}

impl CampaignSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: CampaignSpec = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1),
            msg: e.message().to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.instances == 0 {
            return bad("instances must be at least 1".into());
        }
        if self.mode.is_classical() {
            if self.runs == 0 {
                return bad("runs must be at least 1".into());
            }
            if self.p.is_empty() {
                return bad(format!("{:?} needs a p grid", self.mode));
            }
            if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return bad(format!("p must lie in [0, 1], got {p}"));
            }
        }
        if self.mode == Mode::QuantumCycles {
            if self.theta.is_empty() {
                return bad("quantum_cycles needs a theta grid".into());
            }
            self.stage_policy()?;
        }
        if !self.mode.is_classical() {
            self.space()?;
            if !(self.quantum.tol > 0.0 && self.quantum.t_max > 0.0) {
                return bad("quantum.tol and quantum.t_max must be positive".into());
            }
        }
        if self.graph == GraphKind::Random && self.pairs.is_empty() && !self.n.is_empty() && self.k.is_empty() {
            return bad("random graphs need a k grid or explicit pairs".into());
        }
        Ok(())
    }

    fn stage_policy(&self) -> Result<StagePolicy> {
        StagePolicy::from_str(&self.quantum.policy)
    }

    fn space(&self) -> Result<SpaceKind> {
        SpaceKind::from_str(&self.quantum.space)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("spec serializes")))
    }

    fn graph_cells(&self) -> Vec<(usize, Option<f64>)> {
        match self.graph {
            GraphKind::Chain if self.pairs.is_empty() => self.n.iter().map(|&n| (n, None)).collect(),
            GraphKind::Chain => self.pairs.iter().map(|&(n, _)| (n, None)).collect(),
            GraphKind::Random if !self.pairs.is_empty() => self.pairs.iter().map(|&(n, k)| (n, Some(k))).collect(),
            GraphKind::Random => self
                .n
                .iter()
                .flat_map(|&n| self.k.iter().map(move |&k| (n, Some(k))))
                .collect(),
        }
    }

    /// Grid cells in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let ps: Vec<Option<f64>> = if self.mode.is_classical() {
            self.p.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let thetas: Vec<Option<f64>> = if self.mode == Mode::QuantumCycles {
            self.theta.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let mut out = Vec::new();
        for (n, k) in self.graph_cells() {
            for &p in &ps {
                for &theta in &thetas {
                    let mut key = match k {
                        Some(k) => format!("N{n}_k{k}"),
                        None => format!("chain{n}"),
                    };
                    if let Some(p) = p {
                        let _ = write!(key, "_p{p}");
                    }
                    if let Some(t) = theta {
                        let _ = write!(key, "_t{t}");
                    }
                    let seed = derive_seed(self.seed, &key);
                    out.push(Cell { key, n, k, p, theta, seed });
                }
            }
        }
        out
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// First eight bytes (little endian) of `SHA-256(seed_le || label)`.
pub fn derive_seed(campaign_seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(campaign_seed.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub key: String,
    pub n: usize,
    /// Target average degree; `None` for chains.
    pub k: Option<f64>,
    pub p: Option<f64>,
    pub theta: Option<f64>,
    pub seed: u64,
}

impl Cell {
    /// Graph seed for instance `i`; shared by every `p` and `theta` at this
    /// `(N, k)`.
    fn graph_seed(&self, campaign_seed: u64, i: usize) -> u64 {
        let k = self.k.map_or("chain".to_string(), |k| k.to_string());
        derive_seed(campaign_seed, &format!("graph/N{}/k{k}/{i}", self.n))
    }

    fn graph(&self, seed: u64) -> Result<Graph> {
        match self.k {
            Some(k) => gen_random_graph(self.n, k, seed),
            None => gen_open_chain(self.n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub index: usize,
    pub graph_seed: u64,
    pub run_seed: u64,
    pub avg_degree: f64,
    /// MIS frequency, mean steps, relaxation time or cycle count, by mode.
    pub value: Option<f64>,
    /// Monte-Carlo standard error of `value`, where one applies.
    pub sigma: Option<f64>,
    pub mean_steps: Option<f64>,
    pub unabsorbed: u64,
    pub converged: Option<bool>,
    pub final_p_mis: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub count: usize,
    pub missing: usize,
    pub mean: Option<f64>,
    /// Sample variance across instances.
    pub variance: Option<f64>,
    /// Standard error of `mean`: propagated Monte-Carlo error for MIS
    /// frequencies, instance spread otherwise.
    pub sem: Option<f64>,
    pub mean_steps: Option<f64>,
    pub mean_degree: f64,
    pub unabsorbed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub mode: Mode,
    pub spec_hash: String,
    pub status: CellStatus,
    pub error: Option<String>,
    pub instances: Vec<InstanceResult>,
    pub summary: Option<CellSummary>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn variance(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    Some(match xs.len() {
        1 => 0.0,
        n => xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64,
    })
}

fn summarize(mode: Mode, inst: &[InstanceResult]) -> CellSummary {
    let values: Vec<f64> = inst.iter().filter_map(|r| r.value).collect();
    let var = variance(&values);
    let m = values.len() as f64;
    let sem = if mode.measures_p_mis() {
        let s2: Option<f64> = inst.iter().filter(|r| r.value.is_some()).map(|r| r.sigma.map(|s| s * s)).sum();
        s2.filter(|_| m > 0.0).map(|s2| s2.sqrt() / m)
    } else {
        var.map(|v| (v / m).sqrt())
    };
    let steps: Vec<f64> = inst.iter().filter_map(|r| r.mean_steps).collect();
    let degrees: Vec<f64> = inst.iter().map(|r| r.avg_degree).collect();
    CellSummary {
        count: values.len(),
        missing: inst.len() - values.len(),
        mean: mean(&values),
        variance: var,
        sem,
        mean_steps: mean(&steps),
        mean_degree: mean(&degrees).unwrap_or(0.0),
        unabsorbed: inst.iter().map(|r| r.unabsorbed).sum(),
    }
}

fn run_instance(spec: &CampaignSpec, cell: &Cell, i: usize) -> Result<InstanceResult> {
    let graph_seed = cell.graph_seed(spec.seed, i);
    let run_seed = derive_seed(cell.seed, &format!("run/{i}"));
    let g = cell.graph(graph_seed)?;
    let mut r = InstanceResult {
        index: i,
        graph_seed,
        run_seed,
        avg_degree: g.average_degree(),
        value: None,
        sigma: None,
        mean_steps: None,
        unabsorbed: 0,
        converged: None,
        final_p_mis: None,
    };
    match spec.mode {
        m if m.is_classical() => {
            let params = PcaParams {
                p: cell.p.expect("classical cells carry p"),
                seed: run_seed,
                max_steps: spec.classical.max_steps,
                rule: spec.classical.rule,
                start: None,
            };
            let stats = estimate_ensemble_with(&g, &params, spec.runs)?;
            r.mean_steps = stats.mean_steps;
            r.unabsorbed = stats.unabsorbed;
            if m.measures_p_mis() {
                r.value = stats.p_mis_hat;
                r.sigma = stats.sigma();
            } else {
                r.value = stats.mean_steps;
                r.sigma = stats
                    .var_steps
                    .zip(stats.mean_steps)
                    .map(|(v, _)| (v / stats.absorbed as f64).sqrt());
            }
        }
        Mode::QuantumRelaxation => {
            let (t, converged) = relaxation_time(&g, spec.quantum.tol, spec.quantum.t_max)?;
            r.value = Some(t);
            r.converged = Some(converged);
        }
        Mode::QuantumCycles => {
            let params = ProtocolParams {
                theta: cell.theta.expect("cycle cells carry theta"),
                r_max: spec.quantum.r_max,
                target: spec.quantum.target,
                policy: spec.stage_policy()?,
                space: spec.space()?,
                stop_at_target: true,
                top_k: 0,
                check_positivity: false,
            };
            let trace = run_protocol(&g, &params)?;
            r.value = trace.r_hit.map(|x| x as f64);
            r.converged = Some(trace.r_hit.is_some());
            r.final_p_mis = Some(trace.final_p_mis());
        }
        _ => unreachable!(),
    }
    Ok(r)
}

/// Computes one cell; failures are captured in the result.
pub fn run_cell(spec: &CampaignSpec, cell: &Cell) -> CellResult {
    let outcome: Result<Vec<InstanceResult>> = (0..spec.instances)
        .into_par_iter()
        .map(|i| run_instance(spec, cell, i))
        .collect();
    let (status, error, instances) = match outcome {
        Ok(v) => (CellStatus::Done, None, v),
        Err(e) => (CellStatus::Failed, Some(e.to_string()), Vec::new()),
    };
    let summary = (status == CellStatus::Done).then(|| summarize(spec.mode, &instances));
    CellResult {
        cell: cell.clone(),
        mode: spec.mode,
        spec_hash: spec.hash(),
        status,
        error,
        instances,
        summary,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitsReport {
    pub fits: Vec<NamedFit>,
    pub reference: BTreeMap<String, String>,
}

impl FitsReport {
    pub fn get(&self, name: &str) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.name == name)?.fit.as_ref()
    }
}

fn named(name: &str, r: Result<FitResult>) -> NamedFit {
    match r {
        Ok(f) => NamedFit {
            name: name.into(),
            fit: Some(f),
            error: None,
        },
        Err(e) => NamedFit {
            name: name.into(),
            fit: None,
            error: Some(e.to_string()),
        },
    }
}

fn done(cells: &[CellResult]) -> impl Iterator<Item = (&CellResult, &CellSummary)> {
    cells.iter().filter_map(|c| c.summary.as_ref().map(|s| (c, s)))
}

/// Scaling fits appropriate to the campaign mode.
pub fn campaign_fits(spec: &CampaignSpec, cells: &[CellResult]) -> FitsReport {
    let mut fits = Vec::new();
    let cell_means = |x: &dyn Fn(&CellResult, &CellSummary) -> f64| -> (Vec<f64>, Vec<f64>) {
        done(cells)
            .filter_map(|(c, s)| s.mean.map(|m| (x(c, s), m)))
            .unzip()
    };
    match spec.mode {
        Mode::ClassicalScalingN => {
            let (xs, ys) = cell_means(&|c, _| c.cell.n as f64);
            fits.push(named("steps_vs_N", fit_power(&xs, &ys)));
        }
        Mode::ClassicalScalingK => {
            let (xs, ys) = cell_means(&|_, s| s.mean_degree);
            fits.push(named("steps_vs_k", fit_exponential(&xs, &ys)));
        }
        Mode::QuantumRelaxation => {
            let (mut ns, mut ks, mut ts) = (Vec::new(), Vec::new(), Vec::new());
            for (c, s) in done(cells) {
                if let Some(t) = s.mean {
                    ns.push(c.cell.n as f64);
                    ks.push(s.mean_degree);
                    ts.push(t);
                }
            }
            fits.push(named("relaxation_vs_N_over_k", fit_power_ratio(&ns, &ks, &ts)));
        }
        Mode::QuantumCycles => {
            let mut thetas: Vec<f64> = spec.theta.clone();
            thetas.dedup();
            for theta in thetas {
                let (xs, ys): (Vec<f64>, Vec<f64>) = done(cells)
                    .filter(|(c, _)| c.cell.theta == Some(theta))
                    .flat_map(|(c, _)| {
                        c.instances
                            .iter()
                            .filter_map(move |r| r.value.filter(|v| *v > 0.0).map(|v| (c.cell.n as f64, v)))
                    })
                    .unzip();
                fits.push(named(&format!("cycles_vs_N_theta{theta}"), fit_cycles(&xs, &ys)));
            }
        }
        Mode::ClassicalHeatmap | Mode::ClassicalPSweep => {}
    }
    FitsReport {
        fits,
        reference: spec.reference.clone(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

/// One row per cell.
pub fn results_csv(cells: &[CellResult]) -> String {
    let mut s = String::from(
        "key,status,n,k,p,theta,instances,missing,mean,variance,sem,mean_steps,mean_degree,unabsorbed,error\n",
    );
    for c in cells {
        let sm = c.summary.as_ref();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.cell.key,
            if c.status == CellStatus::Done { "done" } else { "failed" },
            c.cell.n,
            opt(c.cell.k),
            opt(c.cell.p),
            opt(c.cell.theta),
            sm.map_or(0, |s| s.count),
            sm.map_or(0, |s| s.missing),
            opt(sm.and_then(|s| s.mean)),
            opt(sm.and_then(|s| s.variance)),
            opt(sm.and_then(|s| s.sem)),
            opt(sm.and_then(|s| s.mean_steps)),
            sm.map_or(String::new(), |s| s.mean_degree.to_string()),
            sm.map_or(0, |s| s.unabsorbed),
            c.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        );
    }
    s
}

/// Observed against fitted relaxation times.
pub fn parity_csv(fits: &FitsReport) -> Option<String> {
    let f = fits.get("relaxation_vs_N_over_k")?;
    let mut s = String::from("n_over_k,observed,fitted\n");
    for p in &f.points {
        let _ = writeln!(s, "{},{},{}", p.x, p.observed, p.fitted);
    }
    Some(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub key: String,
    pub seed: u64,
    pub status: CellStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub spec_hash: String,
    pub spec: CampaignSpec,
    pub cells: Vec<ManifestCell>,
}

#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub cells: Vec<CellResult>,
    pub fits: FitsReport,
    pub computed: usize,
    pub reused: usize,
    pub failed: usize,
}

fn cell_path(dir: &Path, key: &str) -> PathBuf {
    dir.join("cells").join(format!("{key}.json"))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn load_cell(path: &Path, hash: &str) -> Option<CellResult> {
    let c: CellResult = serde_json::from_slice(&fs::read(path).ok()?).ok()?;
    (c.spec_hash == hash).then_some(c)
}

/// Runs every cell of `spec`. With `out`, results are written there; with
/// `resume`, cells already present for the same spec are reused.
pub fn run_campaign(spec: &CampaignSpec, out: Option<&Path>, resume: bool) -> Result<CampaignOutcome> {
    spec.validate()?;
    let hash = spec.hash();
    if let Some(dir) = out {
        fs::create_dir_all(dir.join("cells"))?;
        let manifest = dir.join("manifest.json");
        if resume && manifest.exists() {
            let m: Manifest = serde_json::from_slice(&fs::read(&manifest)?)?;
            if m.spec_hash != hash {
                return Err(Error::InvalidParameter(format!(
                    "{} holds campaign {} with a different spec",
                    dir.display(),
                    m.spec.name
                )));
            }
        }
    }
    let cells = spec.cells();
    let results: Vec<(CellResult, bool)> = cells
        .par_iter()
        .map(|cell| {
            if let (Some(dir), true) = (out, resume) {
                if let Some(c) = load_cell(&cell_path(dir, &cell.key), &hash) {
                    return Ok((c, false));
                }
            }
            let c = run_cell(spec, cell);
            if let Some(dir) = out {
                write_atomic(&cell_path(dir, &cell.key), &pretty(&c)?)?;
            }
            Ok((c, true))
        })
        .collect::<Result<_>>()?;
    let computed = results.iter().filter(|r| r.1).count();
    let cells: Vec<CellResult> = results.into_iter().map(|r| r.0).collect();
    let fits = campaign_fits(spec, &cells);
    if let Some(dir) = out {
        write_atomic(&dir.join("results.csv"), results_csv(&cells).as_bytes())?;
        write_atomic(&dir.join("fits.json"), &pretty(&fits)?)?;
        if let Some(p) = parity_csv(&fits) {
            write_atomic(&dir.join("parity.csv"), p.as_bytes())?;
        }
        let manifest = Manifest {
            tool: "misca".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            spec_hash: hash,
            spec: spec.clone(),
            cells: cells
                .iter()
                .map(|c| ManifestCell {
                    key: c.cell.key.clone(),
                    seed: c.cell.seed,
                    status: c.status,
                })
                .collect(),
        };
        write_atomic(&dir.join("manifest.json"), &pretty(&manifest)?)?;
    }
    Ok(CampaignOutcome {
        failed: cells.iter().filter(|c| c.status == CellStatus::Failed).count(),
        reused: cells.len() - computed,
        computed,
        cells,
        fits,
    })
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// Bundled campaign specs. The `-full` presets use the reference grids and
/// exceed desk-scale budgets.
pub const PRESETS: &[(&str, &str)] = &[
    ("heatmap-mini", include_str!("../presets/heatmap-mini.toml")),
    ("heatmap-full", include_str!("../presets/heatmap-full.toml")),
    ("p-sweep-mini", include_str!("../presets/p-sweep-mini.toml")),
    ("scaling-n", include_str!("../presets/scaling-n.toml")),
    ("scaling-k", include_str!("../presets/scaling-k.toml")),
    ("relaxation-mini", include_str!("../presets/relaxation-mini.toml")),
    ("relaxation-full", include_str!("../presets/relaxation-full.toml")),
    ("cycles-chain", include_str!("../presets/cycles-chain.toml")),
];

pub fn preset(name: &str) -> Result<CampaignSpec> {
    let text = PRESETS
        .iter()
        .find(|p| p.0 == name)
        .map(|p| p.1)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown preset {name}")))?;
    CampaignSpec::parse(text)
}
