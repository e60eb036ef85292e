//! `kagome` command line: enumeration, sampling, exact analysis, benchmarks,
//! minimal tilings, rendering and invariant campaigns.
//!
//! Exit codes: 0 success, 1 domain error (reported as JSON on stderr),
//! 2 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use kagome::cftp::{benchmark_scaling, cftp_run, CftpMethod, CftpOptions, DEFAULT_BUDGET};
use kagome::chain::parse_rational;
use kagome::graph::{check_distinct_heights, diameter, enumerate, node_cap_from_env};
use kagome::kernel::{exact_mixing_time, DEFAULT_MIXING_CAP};
use kagome::ledger::path_coupling_ledger;
use kagome::region::{make_region, RegionFamily};
use kagome::render::{render, render_prototiles, RenderStyle};
use kagome::verify::run_campaign;
use kagome::{ChainVariant, Error, Exact, FlipVariant, Region, Result, Tiling};
use num_rational::BigRational;
use rayon::prelude::*;
use serde_json::{json, Value};
use num_traits::Zero;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "kagome", version, about = "Kagome lattice tilings and flip chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the flip graph and report its statistics.
    Enumerate {
        #[arg(long)]
        region: String,
        #[arg(long, default_value = "general")]
        variant: String,
        /// Also write the graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Also write the full graph as JSON.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Exact samples by coupling from the past, one tiling JSON per line.
    Sample {
        #[arg(long)]
        region: String,
        #[arg(long, default_value = "general")]
        variant: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        samples: u64,
        /// Force a CFTP method instead of the variant's default.
        #[arg(long, value_parser = ["sandwich", "exhaustive"])]
        method: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact mixing time on a small region.
    Mix {
        #[arg(long)]
        region: String,
        #[arg(long, default_value = "general")]
        variant: String,
        #[arg(long, default_value = "1/4")]
        eps: String,
        /// Use exact rationals instead of floating point.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
    },
    /// Exact path-coupling ledger: worst expected distance change and its witness pair.
    Ledger {
        #[arg(long)]
        region: String,
        #[arg(long, default_value = "general")]
        variant: String,
    },
    /// Forward coupling times over region sizes; CSV plus fitted exponent.
    Bench {
        /// Sizes as `a..b` (inclusive) or a comma list.
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 200)]
        trials: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "square")]
        family: String,
        #[arg(long, default_value = "general")]
        variant: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Write the CSV here and the summary JSON to stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Minimal restrained tiling of a lozenge by contour peeling.
    Minimal {
        #[arg(long)]
        region: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a tiling JSON (or the three prototiles) to SVG.
    Render {
        #[arg(long = "in", required_unless_present = "prototiles")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Style JSON file.
        #[arg(long)]
        style: Option<PathBuf>,
        #[arg(long)]
        heights: bool,
        #[arg(long)]
        flips: bool,
        #[arg(long)]
        prototiles: bool,
    },
    /// Run the randomized invariant campaigns and print the report.
    Verify {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        ops: u64,
    },
}

/// `family:n` or a path to a region JSON file.
fn parse_region(spec: &str) -> Result<Arc<Region>> {
    if let Some((family, n)) = spec.split_once(':') {
        let family: RegionFamily = match family {
            "lozenge" => RegionFamily::Lozenge,
            "square" => RegionFamily::Square,
            "nonflat" => RegionFamily::Nonflat,
            _ => return Err(Error::InvalidParameter(format!("unknown region family {family:?}"))),
        };
        let n: u32 = n.parse().map_err(|_| Error::InvalidParameter(format!("bad region size {n:?}")))?;
        return make_region(family, n).map(Arc::new);
    }
    Region::from_json(&std::fs::read_to_string(spec)?).map(Arc::new)
}

fn parse_sizes(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::InvalidParameter(format!("bad size list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn flips_for(v: &ChainVariant) -> FlipVariant {
    if v.restrained_only() {
        FlipVariant::RestrainedFlips
    } else {
        FlipVariant::AllFlips
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn print_json(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Enumerate { region, variant, dot, graph } => {
            let r = parse_region(&region)?;
            let v: ChainVariant = variant.parse()?;
            let g = enumerate(&r, flips_for(&v), node_cap_from_env())?;
            let d = diameter(&g);
            let heights = check_distinct_heights(&g)?;
            let (minima, maxima) = g.local_extremes();
            if let Some(p) = dot {
                std::fs::write(p, g.to_dot())?;
            }
            if let Some(p) = graph {
                std::fs::write(p, serde_json::to_string(&g.to_json_value()?)?)?;
            }
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "region": { "family": r.family(), "n": r.size_param(), "tiles": r.num_tiles(),
                            "vertices": r.num_vertices(), "inner_vertices": r.num_inner() },
                "variant": v.to_string(),
                "nodes": g.num_nodes(),
                "edges": g.edges().len(),
                "connected": d.connected,
                "components": d.component_diameters.len(),
                "diameter": d.diameter,
                "minima": minima.len(),
                "maxima": maxima.len(),
                "max_distinct_heights": heights.max,
            }))?;
        }
        Command::Sample { region, variant, seed, samples, method, budget, out } => {
            let r = parse_region(&region)?;
            let v: ChainVariant = variant.parse()?;
            let mut opts = CftpOptions { budget, ..CftpOptions::for_variant(&v) };
            match method.as_deref() {
                Some("sandwich") => opts.method = CftpMethod::Sandwich,
                Some("exhaustive") => opts.method = CftpMethod::Exhaustive,
                _ => {}
            }
            // Sample i uses rng seed `seed + i`.
            let lines: Vec<String> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let run = cftp_run(&r, &v, seed.wrapping_add(i), &opts, &mut |_, _| {})?;
                    Ok(serde_json::to_string(&run.result.to_json_value())?)
                })
                .collect::<Result<_>>()?;
            let mut text = lines.join("\n");
            text.push('\n');
            write_out(out.as_deref(), &text)?;
        }
        Command::Mix { region, variant, eps, exact, max_steps } => {
            let r = parse_region(&region)?;
            let v: ChainVariant = variant.parse()?;
            let g = enumerate(&r, flips_for(&v), node_cap_from_env())?;
            let e = parse_rational(&eps)?;
            let t = if exact {
                let e = BigRational::new((*e.numer()).into(), (*e.denom()).into());
                exact_mixing_time::<Exact>(&g, &v, &e, DEFAULT_MIXING_CAP, max_steps)?
            } else {
                let e = *e.numer() as f64 / *e.denom() as f64;
                exact_mixing_time::<f64>(&g, &v, &e, DEFAULT_MIXING_CAP, max_steps)?
            };
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "variant": v.to_string(),
                "nodes": g.num_nodes(),
                "eps": e.to_string(),
                "arithmetic": if exact { "exact" } else { "f64" },
                "mixing_time": t,
            }))?;
        }
        Command::Ledger { region, variant } => {
            let r = parse_region(&region)?;
            let v: ChainVariant = variant.parse()?;
            let g = enumerate(&r, flips_for(&v), node_cap_from_env())?;
            let l = path_coupling_ledger::<Exact>(&g, &v)?;
            let s = l.summary(&g);
            let positive = l.entries.iter().filter(|e| e.expected_delta > Exact::zero()).count();
            let witness = l.worst_entry().map(|e| {
                json!({
                    "a": g.node(e.pair.0).to_json_value(),
                    "b": g.node(e.pair.1).to_json_value(),
                    "vertex": r.vertex(e.vertex),
                    "contributions": e.contributions.iter()
                        .map(|(u, c)| json!({ "vertex": r.vertex(*u), "value": c.to_string() }))
                        .collect::<Vec<_>>(),
                })
            });
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "variant": v.to_string(),
                "nodes": g.num_nodes(),
                "summary": s,
                "positive_entries": positive,
                "witness": witness,
            }))?;
        }
        Command::Bench { sizes, trials, seed, family, variant, budget, csv } => {
            let sizes = parse_sizes(&sizes)?;
            let v: ChainVariant = variant.parse()?;
            let fam = parse_region(&format!("{family}:2"))?.family();
            let rep = benchmark_scaling(&sizes, trials, &v, seed, budget, |n| make_region(fam, n))?;
            let summary = json!({
                "schema_version": SCHEMA_VERSION,
                "family": fam,
                "variant": v.to_string(),
                "seed": seed,
                "trials": trials,
                "sizes": rep.sizes,
                "exponent": rep.exponent,
            });
            match csv {
                Some(p) => {
                    std::fs::write(p, rep.to_csv())?;
                    print_json(&summary)?;
                }
                None => {
                    print!("{}", rep.to_csv());
                    eprintln!("{}", serde_json::to_string(&summary)?);
                }
            }
        }
        Command::Minimal { region, out } => {
            let r = parse_region(&region)?;
            let t = kagome::contour_peel_minimal(&r)?;
            write_out(out.as_deref(), &format!("{}\n", t.to_json()))?;
        }
        Command::Render { input, out, style, heights, flips, prototiles } => {
            let mut st = match style {
                Some(p) => RenderStyle::from_json(&std::fs::read_to_string(p)?)?,
                None => RenderStyle::default(),
            };
            st.show_heights |= heights;
            st.show_flips |= flips;
            let svg = if prototiles {
                render_prototiles(&st)
            } else {
                let path = input.expect("clap requires --in");
                let t = Tiling::from_json(&std::fs::read_to_string(path)?)?;
                render(&t, &st)
            };
            std::fs::write(out, svg)?;
        }
        Command::Verify { seed, ops } => {
            let rep = run_campaign(ops, seed)?;
            print_json(&serde_json::to_value(&rep)?)?;
            for s in &rep.suites {
                eprintln!("{} {} ({} violations in {} operations)", if s.passed() { "PASS" } else { "FAIL" }, s.name, s.violations, s.operations);
            }
            if !rep.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let report = json!({ "schema_version": SCHEMA_VERSION, "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(1)
        }
    }
}
