//! Iterative time-series aggregation with certified bounds.
//!
//! Each iteration solves an aggregated model (a lower bound on the full-scale
//! optimum), fixes its binaries in the full-scale model to obtain a feasible
//! solution (an upper bound), and refines the partition until the relative gap
//! falls below the threshold.

use std::io::Write;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::aggregation::build_aggregated;
use crate::clustering::{FeatureMatrix, Technique};
use crate::error::{GepError, Result};
use crate::instance::GepInstance;
use crate::model::{build_restricted, decode_solution, residuals, FullSolution, ModelKind};
use crate::par::Execution;
use crate::solve::SolverConfig;

/// One row of a bounds trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRecord {
    pub iter: usize,
    /// Cluster count (Benders: number of cuts in the master).
    pub k: usize,
    pub lb_cand: f64,
    pub ub_cand: f64,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub ms: f64,
    /// Largest constraint residual of this iteration's feasible solution.
    #[serde(default)]
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Gap fell to the threshold.
    Threshold,
    /// The aggregated model coincided with the full-scale model.
    Exact,
    #[default]
    IterationLimit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundsTrace {
    pub records: Vec<BoundsRecord>,
    pub lb: f64,
    pub ub: f64,
    /// Feasible full-scale solution achieving `ub`.
    pub solution: Option<FullSolution>,
    pub termination: Termination,
}

pub const TRACE_HEADER: &str = "iter,K,lb_cand,ub_cand,lb,ub,gap,ms";

impl BoundsTrace {
    pub fn final_gap(&self) -> Option<f64> {
        self.records.last().map(|r| r.gap)
    }

    /// Trace rows as CSV. Timings are written as zero when `timing` is off.
    pub fn write_csv<W: Write>(&self, mut w: W, timing: bool) -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            let ms = if timing { r.ms } else { 0.0 };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{:.3}",
                r.iter, r.k, r.lb_cand, r.ub_cand, r.lb, r.ub, r.gap, ms
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self, timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, timing).expect("write to memory");
        String::from_utf8(buf).expect("ascii csv")
    }
}

/// Several traces in one CSV, each row prefixed by its method label.
pub fn write_overlay<W: Write>(mut w: W, traces: &[(&str, &BoundsTrace)], timing: bool) -> std::io::Result<()> {
    writeln!(w, "method,{TRACE_HEADER}")?;
    for (label, trace) in traces {
        let body = trace.to_csv(timing);
        for line in body.lines().skip(1) {
            writeln!(w, "{label},{line}")?;
        }
    }
    Ok(())
}

/// Relative gap `(ub − lb) / ub`; zero when both bounds are zero.
pub fn optimality_gap(ub: f64, lb: f64) -> Result<f64> {
    if ub == 0.0 {
        return if lb == 0.0 {
            Ok(0.0)
        } else {
            Err(GepError::UndefinedGap { ub, lb })
        };
    }
    if !(ub.is_finite() && lb.is_finite()) {
        return if ub == f64::INFINITY { Ok(f64::INFINITY) } else { Err(GepError::UndefinedGap { ub, lb }) };
    }
    if ub < lb - 1e-9 * ub.abs().max(1.0) {
        return Err(GepError::InvalidArgument(format!("upper bound {ub} below lower bound {lb}")));
    }
    Ok(((ub - lb) / ub.abs()).max(0.0))
}

#[derive(Debug, Clone)]
pub struct TsaOptions {
    pub kind: ModelKind,
    pub technique: Technique,
    pub k0: usize,
    pub rho: usize,
    pub eps_thr: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    pub execution: Execution,
}

impl Default for TsaOptions {
    fn default() -> Self {
        Self {
            kind: ModelKind::Milp,
            technique: Technique::Sequential,
            k0: 10,
            rho: 10,
            eps_thr: 0.01,
            max_iter: 1000,
            seed: 0,
            solver: SolverConfig::BuiltIn,
            execution: Execution::Parallel,
        }
    }
}

/// Seed of the partition drawn at `iter`.
pub fn iteration_seed(seed: u64, iter: usize) -> u64 {
    seed.wrapping_add((iter as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn abort(message: impl Into<String>, trace: &BoundsTrace) -> GepError {
    GepError::Aborted {
        message: message.into(),
        trace: Box::new(trace.clone()),
    }
}

/// Run the aggregation loop until the gap reaches `eps_thr`, the partition
/// becomes exact, or `max_iter` iterations have passed.
pub fn run_tsa_bounds(inst: &GepInstance, opts: &TsaOptions) -> Result<BoundsTrace> {
    inst.validate()?;
    let t = inst.t();
    if opts.k0 == 0 || opts.k0 > t {
        return Err(GepError::InvalidArgument(format!("K0 = {} must lie in 1..={t}", opts.k0)));
    }
    if opts.rho == 0 {
        return Err(GepError::InvalidArgument("rho must be at least 1".into()));
    }
    if !(opts.eps_thr > 0.0) {
        return Err(GepError::InvalidArgument("eps_thr must be positive".into()));
    }
    let features = FeatureMatrix::from_instance(inst, true);
    let mut trace = BoundsTrace {
        lb: f64::NEG_INFINITY,
        ub: f64::INFINITY,
        ..Default::default()
    };
    let mut warm: Option<Vec<f64>> = None;

    for i in 0..=opts.max_iter {
        let start = Instant::now();
        let k = opts.k0.saturating_add(i.saturating_mul(opts.rho)).min(t);
        let partition = opts
            .technique
            .partition(&features, k, iteration_seed(opts.seed, i), opts.execution)
            .map_err(|e| abort(format!("clustering failed at iteration {i}: {e}"), &trace))?;

        let agg = build_aggregated(inst, &partition, opts.kind)?;
        let res = opts
            .solver
            .solve(&agg, warm.as_deref())
            .map_err(|e| abort(format!("aggregated solve failed at iteration {i}: {e}"), &trace))?;
        if !res.has_solution() {
            return Err(abort(
                format!("aggregated model returned {:?} at iteration {i}", res.status),
                &trace,
            ));
        }
        let lb_cand = res.bound;
        let b_hat: Vec<f64> = {
            let layout = agg.layout.as_ref().expect("layout");
            (0..inst.num_assets())
                .map(|j| res.primal[layout.b(j)].round().clamp(0.0, 1.0))
                .collect()
        };

        let restricted = build_restricted(inst, &b_hat, opts.kind)?;
        let rres = crate::solve::solve_convex(&restricted)
            .map_err(|e| abort(format!("restricted solve failed at iteration {i}: {e}"), &trace))?;
        if !rres.is_optimal() {
            return Err(abort(
                format!("restricted model returned {:?} at iteration {i}", rres.status),
                &trace,
            ));
        }
        let ub_cand = rres.objective;
        let sol = decode_solution(&restricted, &rres.primal)?;
        let residual = residuals(inst, &sol)?.max();
        if lb_cand > trace.lb {
            trace.lb = lb_cand;
        }
        if ub_cand < trace.ub {
            trace.ub = ub_cand;
            trace.solution = Some(sol);
        }
        // A lower bound above the upper bound can only come from solver
        // tolerances; the gap is then reported as zero.
        let gap = optimality_gap(trace.ub, trace.lb.min(trace.ub))?;
        trace.records.push(BoundsRecord {
            iter: i,
            k,
            lb_cand,
            ub_cand,
            lb: trace.lb,
            ub: trace.ub,
            gap,
            ms: start.elapsed().as_secs_f64() * 1e3,
            residual,
        });
        info!("iter {i} K={k} lb={:.6e} ub={:.6e} gap={gap:.3e}", trace.lb, trace.ub);
        warm = Some(b_hat);

        if gap <= opts.eps_thr {
            trace.termination = Termination::Threshold;
            break;
        }
        if k == t {
            trace.termination = Termination::Exact;
            break;
        }
    }
    Ok(trace)
}
