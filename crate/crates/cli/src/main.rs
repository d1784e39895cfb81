use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use misca::experiments::{preset, run_campaign, results_csv, CampaignSpec, PRESETS};
use misca::fixtures::Builtin;
use misca::graph::{gen_open_chain, gen_random_graph, gen_unit_disk};
use misca::io::{format_edge_list, format_json, read_graph};
use misca::markov::{
    absorption_analysis_with, closed_form_4node, closed_form_4node_local, closed_form_house, UpdateRule,
};
use misca::pca::{estimate_ensemble_with, PcaParams, DEFAULT_MAX_STEPS};
use misca::quantum::protocol::run_protocol_with;
use misca::quantum::{ProtocolParams, SpaceKind, StagePolicy};
use misca::{Error, Graph};

#[derive(Parser, Debug, Serialize)]
#[command(name = "misca", version, about = "Cellular-automaton solvers for maximum independent set")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Manifest path (default: <out>.manifest.json, or stderr).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum GenKind {
    Random,
    Chain,
    UnitDisk,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum GraphFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Generate a graph as an edge list.
    Gen {
        kind: GenKind,
        n: usize,
        /// Average degree (random) or radius (unit-disk).
        param: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Square side for unit-disk points.
        #[arg(long, default_value_t = 1.0)]
        side: f64,
        #[arg(long, value_enum, default_value_t = GraphFormat::Text)]
        format: GraphFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo estimate of the MIS absorption frequency.
    Pca {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: u64,
        #[arg(long, default_value = "local")]
        rule: UpdateRule,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact absorption probabilities from the Markov chain.
    Exact {
        #[arg(long)]
        graph: String,
        /// Comma-separated activation probabilities.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, default_value = "local")]
        rule: UpdateRule,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Alternating dissipative/unitary protocol.
    Qca {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
        #[arg(long, default_value_t = 0.7)]
        target: f64,
        #[arg(long, default_value_t = 1000)]
        rmax: usize,
        /// steady, criterion[:TOL] or fixed:T
        #[arg(long, default_value = "steady")]
        policy: StagePolicy,
        #[arg(long, default_value = "independent")]
        space: SpaceKind,
        /// Keep cycling after the target is reached.
        #[arg(long)]
        no_stop: bool,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        #[arg(long)]
        check_positivity: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run or resume a campaign.
    Campaign {
        /// Campaign spec file.
        #[arg(required_unless_present_any = ["preset", "list"])]
        spec: Option<PathBuf>,
        /// Bundled preset instead of a file.
        #[arg(long, conflicts_with = "spec")]
        preset: Option<String>,
        /// List bundled presets.
        #[arg(long)]
        list: bool,
        #[arg(long, required_unless_present = "list")]
        out: Option<PathBuf>,
        #[arg(long)]
        resume: bool,
    },
}

fn load_graph(spec: &str) -> anyhow::Result<Graph> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return Ok(name.parse::<Builtin>()?.graph()?);
    }
    read_graph(spec).with_context(|| format!("reading graph {spec}"))
}

/// Writes to `out` or stdout.
fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json_line<T: Serialize>(buf: &mut String, v: &T) -> anyhow::Result<()> {
    buf.push_str(&serde_json::to_string(v)?);
    buf.push('\n');
    Ok(())
}

fn write_manifest(cli: &Cli, out: Option<&Path>, extra: Value) -> anyhow::Result<()> {
    let manifest = json!({
        "tool": "misca",
        "version": env!("CARGO_PKG_VERSION"),
        "arguments": cli,
        "result": extra,
    });
    let path = cli.manifest.clone().or_else(|| {
        out.map(|o| {
            let mut s = o.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match path {
        Some(p) => fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?,
        None => eprintln!("manifest: {manifest}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Gen {
            kind,
            n,
            param,
            seed,
            side,
            format,
            out,
        } => {
            let g = match kind {
                GenKind::Chain => gen_open_chain(*n)?,
                GenKind::Random => {
                    let Some(k) = param else { bail!(Error::InvalidParameter("random graphs need an average degree".into())) };
                    gen_random_graph(*n, *k, *seed)?
                }
                GenKind::UnitDisk => {
                    let Some(r) = param else { bail!(Error::InvalidParameter("unit-disk graphs need a radius".into())) };
                    gen_unit_disk(*n, *r, *side, *seed)?
                }
            };
            let text = match format {
                GraphFormat::Text => format_edge_list(&g),
                GraphFormat::Json => format_json(&g) + "\n",
            };
            emit(out.as_deref(), &text)?;
            eprintln!(
                "{} vertices, {} edges, average degree {:.4}",
                g.n(),
                g.edges().len(),
                g.average_degree()
            );
            write_manifest(cli, out.as_deref(), json!({"n": g.n(), "edges": g.edges().len()}))
        }
        Command::Pca {
            graph,
            p,
            runs,
            seed,
            max_steps,
            rule,
            out,
        } => {
            let g = load_graph(graph)?;
            let params = PcaParams {
                p: *p,
                seed: *seed,
                max_steps: *max_steps,
                rule: *rule,
                start: None,
            };
            let stats = estimate_ensemble_with(&g, &params, *runs)?;
            let mut buf = String::new();
            json_line(&mut buf, &json!({"n": g.n(), "p": p, "seed": seed, "rule": rule, "stats": stats}))?;
            emit(out.as_deref(), &buf)?;
            match (stats.p_mis_hat, stats.sigma()) {
                (Some(m), Some(s)) => eprintln!("p_mis_hat = {m:.6} +- {s:.6}"),
                _ => eprintln!("p_mis_hat unavailable"),
            }
            if stats.unabsorbed > 0 {
                eprintln!("{} of {} runs did not absorb within {max_steps} steps", stats.unabsorbed, runs);
            }
            write_manifest(cli, out.as_deref(), json!({"absorbed": stats.absorbed}))
        }
        Command::Exact { graph, p, rule, out } => {
            let g = load_graph(graph)?;
            let builtin = Builtin::identify(&g);
            let mut buf = String::new();
            for &pi in p {
                let rep = absorption_analysis_with(&g, pi, *rule)?;
                let closed = match builtin {
                    Some(Builtin::FourNode) => json!({
                        "printed": closed_form_4node(pi),
                        "local_rule": closed_form_4node_local(pi),
                    }),
                    Some(Builtin::House) => json!({"printed": closed_form_house(pi)}),
                    _ => Value::Null,
                };
                eprintln!("p = {pi}: p_mis = {:.12}, expected steps = {:.6}", rep.p_mis, rep.expected_steps);
                json_line(&mut buf, &json!({"report": rep, "closed_form": closed}))?;
            }
            emit(out.as_deref(), &buf)?;
            write_manifest(
                cli,
                out.as_deref(),
                json!({"graph": builtin.map(|b| b.name()), "points": p.len()}),
            )
        }
        Command::Qca {
            graph,
            theta,
            target,
            rmax,
            policy,
            space,
            no_stop,
            top_k,
            check_positivity,
            out,
        } => {
            let g = load_graph(graph)?;
            let params = ProtocolParams {
                theta: *theta,
                r_max: *rmax,
                target: *target,
                policy: *policy,
                space: *space,
                stop_at_target: !no_stop,
                top_k: *top_k,
                check_positivity: *check_positivity,
            };
            let trace = run_protocol_with(&g, &params, |_, _| {})?;
            let mut buf = String::new();
            for r in &trace.records {
                json_line(&mut buf, r)?;
            }
            emit(out.as_deref(), &buf)?;
            match trace.r_hit {
                Some(r) => eprintln!("target {target} exceeded at r = {r}"),
                None => eprintln!("target {target} not reached within {rmax} cycles"),
            }
            eprintln!("final p_mis = {:.10}", trace.final_p_mis());
            write_manifest(
                cli,
                out.as_deref(),
                json!({"r_hit": trace.r_hit, "final_p_mis": trace.final_p_mis(), "policy": policy.label()}),
            )
        }
        Command::Campaign {
            spec,
            preset: name,
            list,
            out,
            resume,
        } => {
            if *list {
                for (name, text) in PRESETS {
                    let s = CampaignSpec::parse(text)?;
                    println!("{name}\t{:?}\t{} cells", s.mode, s.cells().len());
                }
                return Ok(());
            }
            let spec = match (spec, name) {
                (Some(path), _) => CampaignSpec::read(path).with_context(|| format!("reading {}", path.display()))?,
                (None, Some(name)) => preset(name)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let dir = out.as_deref().expect("clap requires --out");
            let outcome = run_campaign(&spec, Some(dir), *resume)?;
            print!("{}", results_csv(&outcome.cells));
            eprintln!(
                "{}: {} cells ({} computed, {} reused, {} failed)",
                spec.name,
                outcome.cells.len(),
                outcome.computed,
                outcome.reused,
                outcome.failed
            );
            for f in &outcome.fits.fits {
                match (&f.fit, &f.error) {
                    (Some(fit), _) => {
                        let params: Vec<String> = fit
                            .params
                            .iter()
                            .map(|p| format!("{} = {:.4} +- {:.4}", p.name, p.value, p.std_err))
                            .collect();
                        eprintln!("{}: {}, rmse = {:.4}", f.name, params.join(", "), fit.rmse);
                    }
                    (None, Some(e)) => eprintln!("{}: no fit ({e})", f.name),
                    (None, None) => {}
                }
            }
            for c in outcome.cells.iter().filter(|c| c.error.is_some()) {
                eprintln!("cell {} failed: {}", c.cell.key, c.error.as_deref().unwrap_or(""));
            }
            Ok(())
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Numerical { .. } | Error::Integrator(_)) => 3,
        Some(_) => 2,
        None => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
