use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gep_tsa::aggregation::{build_aggregated, decode_aggregated};
use gep_tsa::benders::{run_benders, BendersOptions};
use gep_tsa::bounds::{run_tsa_bounds, write_overlay, BoundsTrace, TsaOptions};
use gep_tsa::clustering::{FeatureMatrix, Technique};
use gep_tsa::instance::{generate_instance, load_instance, save_instance, GenConfig, GepInstance};
use gep_tsa::metrics::{metric_bounds, write_metric_rows, MetricSpec};
use gep_tsa::model::{build_full, decode_solution, objective_terms, residuals, ModelKind};
use gep_tsa::par::Execution;
use gep_tsa::solve::SolverConfig;
use gep_tsa::GepError;

#[derive(Parser)]
#[command(name = "gep-tsa", version, about = "Time-series aggregation bounds for generation expansion planning")]
struct Cli {
    /// Run every batch on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance as JSON.
    Generate(GenerateArgs),
    /// Solve the full-scale model.
    SolveFull(SolveFullArgs),
    /// Solve one aggregated model.
    SolveAgg(SolveAggArgs),
    /// Run the aggregation bounds loop and write its trace.
    TsaBounds(TsaArgs),
    /// Run Benders decomposition and write its trace.
    Benders(BendersArgs),
    /// Bound metrics over the near-optimal set.
    MetricBounds(MetricArgs),
    /// Run both methods and write an overlay trace.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long = "G")]
    g: usize,
    #[arg(long = "N")]
    n: usize,
    #[arg(long = "T")]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    demand_scale: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    /// Drop the storage-state penalty (R = 0).
    #[arg(long)]
    no_storage_penalty: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "milp")]
    model: ModelKind,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct TsaFlags {
    #[arg(long, default_value = "sequential")]
    clustering: Technique,
    #[arg(long, default_value_t = 10)]
    k0: usize,
    #[arg(long, default_value_t = 10)]
    rho: usize,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveFullArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SolveAggArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "sequential")]
    clustering: Technique,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TsaArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    tsa: TsaFlags,
    /// Also write the best feasible solution as JSON.
    #[arg(long)]
    solution_out: Option<PathBuf>,
    /// Write 0 in the ms column so identical runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct BendersArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct MetricArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    tsa: TsaFlags,
    /// `storage:n`, `asset:i`, `investment` or `non_supplied`. Repeatable.
    #[arg(long = "metric", required = true)]
    metrics: Vec<String>,
    /// Cost bounds to use instead of running the bounds loop first.
    #[arg(long, requires = "j_ub")]
    j_lb: Option<f64>,
    #[arg(long, requires = "j_lb")]
    j_ub: Option<f64>,
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    tsa: TsaFlags,
    #[arg(long)]
    no_timing: bool,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    if let Err(e) = run(cli.command, exec) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cmd: Command, exec: Execution) -> Result<()> {
    let solver = SolverConfig::from_env();
    match cmd {
        Command::Generate(a) => {
            let mut cfg = GenConfig::new(a.g, a.n, a.t, a.seed);
            if let Some(d) = a.demand_scale {
                cfg.demand_scale = d;
            }
            if let Some(s0) = a.s0 {
                cfg.s0 = s0;
            }
            cfg.storage_penalty = !a.no_storage_penalty;
            let inst = generate_instance(&cfg)?;
            save_instance(&a.out, &inst)?;
        }
        Command::SolveFull(a) => {
            let inst = load(&a.common.instance)?;
            let kind = a.common.model;
            let prob = build_full(&inst, kind)?;
            let r = solver.solve(&prob, None)?;
            if !r.has_solution() {
                return Err(GepError::Infeasible(format!("full model ended with {:?}", r.status)).into());
            }
            let sol = decode_solution(&prob, &r.primal)?;
            let doc = json!({
                "status": r.status,
                "objective": r.objective,
                "bound": r.bound,
                "breakdown": objective_terms(&inst, &sol, kind)?,
                "max_residual": residuals(&inst, &sol)?.max(),
                "solution": sol,
            });
            write_json(&a.common.out, &doc)?;
        }
        Command::SolveAgg(a) => {
            let inst = load(&a.common.instance)?;
            let features = FeatureMatrix::from_instance(&inst, true);
            let part = a.clustering.partition(&features, a.k, a.seed, exec)?;
            let prob = build_aggregated(&inst, &part, a.common.model)?;
            let r = solver.solve(&prob, None)?;
            if !r.has_solution() {
                return Err(GepError::Infeasible(format!("aggregated model ended with {:?}", r.status)).into());
            }
            let doc = json!({
                "status": r.status,
                "objective": r.objective,
                "bound": r.bound,
                "partition": part,
                "solution": decode_aggregated(&prob, &r.primal)?,
            });
            write_json(&a.common.out, &doc)?;
        }
        Command::TsaBounds(a) => {
            let inst = load(&a.common.instance)?;
            let trace = tsa(&inst, a.common.model, &a.tsa, solver, exec)?;
            write_with(&a.common.out, |w| trace.write_csv(w, !a.no_timing))?;
            if let Some(path) = &a.solution_out {
                write_json(path, &trace.solution)?;
            }
            report(&trace);
        }
        Command::Benders(a) => {
            let inst = load(&a.common.instance)?;
            let opts = BendersOptions {
                kind: a.common.model,
                eps_thr: a.eps,
                max_iter: a.max_iter,
                solver,
            };
            let trace = run_benders(&inst, &opts)?;
            write_with(&a.common.out, |w| trace.write_csv(w, !a.no_timing))?;
            report(&trace);
        }
        Command::MetricBounds(a) => {
            let inst = load(&a.common.instance)?;
            let kind = a.common.model;
            let specs = a
                .metrics
                .iter()
                .map(|m| MetricSpec::parse(&inst, m))
                .collect::<gep_tsa::Result<Vec<_>>>()?;
            let (trace, j_lb, j_ub) = match (a.j_lb, a.j_ub) {
                (Some(lb), Some(ub)) => (None, lb, ub),
                _ => {
                    let t = tsa(&inst, kind, &a.tsa, solver.clone(), exec)?;
                    let (lb, ub) = (t.lb, t.ub);
                    (Some(t), lb, ub)
                }
            };
            let warm = trace.as_ref().and_then(|t| t.solution.as_ref());
            let bounds = specs
                .iter()
                .map(|m| metric_bounds(&inst, m, j_lb, j_ub, kind, warm, &solver, exec))
                .collect::<gep_tsa::Result<Vec<_>>>()?;
            write_with(&a.common.out, |w| {
                if let Some(t) = &trace {
                    t.write_csv(&mut *w, !a.no_timing)?;
                }
                write_metric_rows(w, &bounds)
            })?;
        }
        Command::Compare(a) => {
            let inst = load(&a.common.instance)?;
            let kind = a.common.model;
            let t = tsa(&inst, kind, &a.tsa, solver.clone(), exec)?;
            let opts = BendersOptions {
                kind,
                eps_thr: a.tsa.eps,
                max_iter: a.tsa.max_iter,
                solver,
            };
            let b = run_benders(&inst, &opts)?;
            write_with(&a.common.out, |w| write_overlay(w, &[("tsa", &t), ("benders", &b)], !a.no_timing))?;
        }
    }
    Ok(())
}

fn tsa(inst: &GepInstance, kind: ModelKind, f: &TsaFlags, solver: SolverConfig, exec: Execution) -> Result<BoundsTrace> {
    let opts = TsaOptions {
        kind,
        technique: f.clustering,
        k0: f.k0,
        rho: f.rho,
        eps_thr: f.eps,
        max_iter: f.max_iter,
        seed: f.seed,
        solver,
        execution: exec,
    };
    Ok(run_tsa_bounds(inst, &opts)?)
}

fn report(trace: &BoundsTrace) {
    log::info!(
        "{} iterations, lb {} ub {} gap {:?} ({:?})",
        trace.records.len(),
        trace.lb,
        trace.ub,
        trace.final_gap(),
        trace.termination
    );
}

fn load(path: &Path) -> Result<GepInstance> {
    load_instance(path).with_context(|| format!("loading {}", path.display()))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}
