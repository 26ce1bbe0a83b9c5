//! Bounds on stakeholder metrics implied by a certified cost interval.
//!
//! Every solution whose cost lies within `[J_LB, J_UB]` is a candidate
//! optimum, so minimising and maximising a metric over `J(z) ≤ J_UB` brackets
//! its value at every optimal solution.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundsTrace;
use crate::error::{GepError, Result};
use crate::instance::GepInstance;
use crate::model::{build_metric_model, objective_terms, FullSolution, ModelKind, Sense};
use crate::par::{self, Execution};
use crate::solve::{solve_convex, SolveResult, SolveStatus, SolverConfig};

/// Relative slack added to the cost cap so that a point whose cost equals a
/// numerically computed optimum stays feasible.
pub const CAP_SLACK: f64 = 1e-8;

/// Linear functional `M(z) = ⟨weights, z⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    pub description: String,
    pub weights: FullSolution,
}

impl MetricSpec {
    pub fn new(name: impl Into<String>, description: impl Into<String>, weights: FullSolution) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            weights,
        }
    }

    /// Installed capacity of storage unit `n`.
    pub fn storage_capacity(inst: &GepInstance, n: usize) -> Self {
        let mut w = FullSolution::zeros(inst);
        w.x[inst.g() + n] = 1.0;
        Self::new(format!("x_s[{n}]"), format!("capacity of storage unit {n} (MW)"), w)
    }

    /// Installed capacity of asset `i` (generators first).
    pub fn asset_capacity(inst: &GepInstance, i: usize) -> Self {
        let mut w = FullSolution::zeros(inst);
        w.x[i] = 1.0;
        Self::new(format!("x[{i}]"), format!("capacity of asset {i} (MW)"), w)
    }

    pub fn investment_cost(inst: &GepInstance) -> Self {
        let mut w = FullSolution::zeros(inst);
        w.x = inst.c_inv.clone();
        Self::new("investment", "total investment cost (EUR)", w)
    }

    pub fn non_supplied_energy(inst: &GepInstance) -> Self {
        let mut w = FullSolution::zeros(inst);
        w.d_ns = vec![1.0; inst.t()];
        Self::new("non_supplied", "total non-supplied energy (MWh)", w)
    }

    /// Parse `storage:<n>`, `asset:<i>`, `investment` or `non_supplied`.
    pub fn parse(inst: &GepInstance, text: &str) -> Result<Self> {
        let bad = || GepError::InvalidArgument(format!("unknown metric {text:?}"));
        let (kind, arg) = match text.split_once(':') {
            Some((k, a)) => (k, Some(a.parse::<usize>().map_err(|_| bad())?)),
            None => (text, None),
        };
        let m = match (kind, arg) {
            ("storage", Some(n)) if n < inst.n() => Self::storage_capacity(inst, n),
            ("asset", Some(i)) if i < inst.num_assets() => Self::asset_capacity(inst, i),
            ("investment", None) => Self::investment_cost(inst),
            ("non_supplied", None) => Self::non_supplied_energy(inst),
            _ => return Err(bad()),
        };
        Ok(m)
    }

    pub fn eval(&self, sol: &FullSolution) -> f64 {
        self.weights.dot(sol)
    }

    pub fn check(&self, inst: &GepInstance) -> Result<()> {
        let w = &self.weights;
        let (g, n, t) = (inst.g(), inst.n(), inst.t());
        let shape = w.x.len() == g + n
            && w.b.len() == g + n
            && w.p.len() == t
            && w.p.iter().all(|r| r.len() == g)
            && w.s.len() == t + 1
            && w.s.iter().all(|r| r.len() == n)
            && w.p_c.len() == t
            && w.p_c.iter().all(|r| r.len() == n)
            && w.p_d.len() == t
            && w.p_d.iter().all(|r| r.len() == n)
            && w.d_ns.len() == t;
        if !shape {
            return Err(GepError::Dimension(format!("metric {} does not match the instance", self.name)));
        }
        let all = || {
            w.x.iter()
                .chain(&w.b)
                .chain(w.p.iter().flatten())
                .chain(w.s.iter().flatten())
                .chain(w.p_c.iter().flatten())
                .chain(w.p_d.iter().flatten())
                .chain(&w.d_ns)
        };
        if all().any(|v| !v.is_finite()) {
            return Err(GepError::InvalidArgument(format!("metric {} has non-finite weights", self.name)));
        }
        if all().all(|&v| v == 0.0) {
            return Err(GepError::InvalidArgument(format!("metric {} is identically zero", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBounds {
    pub name: String,
    pub m_lb: f64,
    pub m_ub: f64,
    pub min_solution: FullSolution,
    pub max_solution: FullSolution,
    pub j_lb: f64,
    pub j_ub: f64,
    /// Whether both returned solutions satisfy `J(z) ≥ J_LB` without it being
    /// imposed.
    pub lb_side_holds: bool,
}

fn solve_metric(
    inst: &GepInstance,
    metric: &MetricSpec,
    sense: Sense,
    j_ub: f64,
    kind: ModelKind,
    warm: Option<&[f64]>,
    solver: &SolverConfig,
) -> Result<(SolveResult, FullSolution)> {
    let cap = j_ub + CAP_SLACK * j_ub.abs().max(1.0);
    let prob = build_metric_model(inst, metric, sense, cap, kind)?;
    let res = solver.solve(&prob, warm)?;
    match res.status {
        SolveStatus::Infeasible => {
            return Err(GepError::Infeasible(format!(
                "no solution has cost at most {j_ub}; the cap lies below the optimum"
            )))
        }
        SolveStatus::Unbounded => return Err(GepError::Solver("metric model unbounded".into())),
        _ if !res.has_solution() => return Err(GepError::Solver(format!("metric model returned {:?}", res.status))),
        _ => {}
    }
    let sol = crate::model::decode_solution(&prob, &res.primal)?;
    Ok((res, sol))
}

/// Minimum and maximum of `metric` over all solutions with `J(z) ≤ j_ub`.
#[allow(clippy::too_many_arguments)]
pub fn metric_bounds(
    inst: &GepInstance,
    metric: &MetricSpec,
    j_lb: f64,
    j_ub: f64,
    kind: ModelKind,
    warm: Option<&FullSolution>,
    solver: &SolverConfig,
    exec: Execution,
) -> Result<MetricBounds> {
    if !(j_lb <= j_ub) {
        return Err(GepError::InvalidArgument(format!("j_lb = {j_lb} exceeds j_ub = {j_ub}")));
    }
    let warm_b: Option<Vec<f64>> = match warm {
        Some(w) => {
            let j = objective_terms(inst, w, kind)?.total;
            if j > j_ub + CAP_SLACK * j_ub.abs().max(1.0) {
                return Err(GepError::InvalidArgument(format!(
                    "warm start costs {j}, above the cap {j_ub}"
                )));
            }
            Some(w.b.clone())
        }
        None => None,
    };
    let (lo, hi) = par::join(
        exec,
        || solve_metric(inst, metric, Sense::Min, j_ub, kind, warm_b.as_deref(), solver),
        || solve_metric(inst, metric, Sense::Max, j_ub, kind, warm_b.as_deref(), solver),
    );
    let (lo_res, min_solution) = lo?;
    let (hi_res, max_solution) = hi?;

    let scale = j_lb.abs().max(1.0);
    let lb_side_holds = [&min_solution, &max_solution].iter().all(|s| {
        objective_terms(inst, s, kind).map_or(false, |c| c.total >= j_lb - 1e-6 * scale)
    });
    if !lb_side_holds {
        warn!("metric {}: a returned solution costs less than j_lb", metric.name);
    }
    Ok(MetricBounds {
        name: metric.name.clone(),
        m_lb: lo_res.bound,
        m_ub: -hi_res.bound,
        min_solution,
        max_solution,
        j_lb,
        j_ub,
        lb_side_holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxMode {
    /// Minimum over the continuous relaxation: a valid lower bound on `M_LB`.
    LpRelaxMin,
    /// Maximum with binaries fixed: an achievable value, not an upper bound.
    FixVarsMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneSidedBound {
    pub mode: RelaxMode,
    pub value: f64,
    /// Set when the value comes from a restricted model.
    pub restriction: bool,
    pub solution: Option<FullSolution>,
}

/// Cheaper one-sided metric bound.
pub fn metric_bounds_relaxed(
    inst: &GepInstance,
    metric: &MetricSpec,
    j_ub: f64,
    kind: ModelKind,
    mode: RelaxMode,
    fix_from: Option<&FullSolution>,
) -> Result<OneSidedBound> {
    let cap = j_ub + CAP_SLACK * j_ub.abs().max(1.0);
    let (sense, prob) = match mode {
        RelaxMode::LpRelaxMin => (Sense::Min, build_metric_model(inst, metric, Sense::Min, cap, kind)?.relaxed()),
        RelaxMode::FixVarsMax => {
            let from = fix_from.ok_or_else(|| {
                GepError::InvalidArgument("fix_vars_max needs a solution to take binaries from".into())
            })?;
            crate::model::check_binary_vector(inst, &from.b)?;
            let mut p = build_metric_model(inst, metric, Sense::Max, cap, kind)?;
            let layout = p.layout.clone().expect("layout");
            for (i, &v) in from.b.iter().enumerate() {
                let j = layout.b(i);
                p.lower[j] = v;
                p.upper[j] = v;
                p.integer[j] = false;
            }
            (Sense::Max, p)
        }
    };
    let res = solve_convex(&prob)?;
    if res.status == SolveStatus::Infeasible {
        return Err(GepError::Infeasible(format!("relaxed metric model infeasible under cap {j_ub}")));
    }
    if !res.is_optimal() {
        return Err(GepError::Solver(format!("relaxed metric model returned {:?}", res.status)));
    }
    let value = match sense {
        Sense::Min => res.bound,
        Sense::Max => -res.objective,
    };
    Ok(OneSidedBound {
        mode,
        value,
        restriction: mode == RelaxMode::FixVarsMax,
        solution: Some(crate::model::decode_solution(&prob, &res.primal)?),
    })
}

/// Per-period view of a bounds trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageCostBounds {
    pub lb_per_period: f64,
    pub ub_per_period: f64,
    /// Investment cost of the upper-bound solution divided by its total cost.
    pub investment_share: f64,
    /// Investment cost of the upper-bound solution divided by `T`.
    pub investment_per_period: f64,
    /// Non-investment cost of the upper-bound solution divided by `T`.
    pub operational_per_period: f64,
}

/// `J_LB / T` and `J_UB / T`. As `T` grows the investment term
/// `investment_per_period` vanishes and both bracket the expected per-period
/// operating cost.
pub fn average_cost_bounds(trace: &BoundsTrace, inst: &GepInstance, kind: ModelKind) -> Result<AverageCostBounds> {
    let t = inst.t() as f64;
    let sol = trace
        .solution
        .as_ref()
        .ok_or_else(|| GepError::InvalidArgument("trace has no feasible solution".into()))?;
    let c = objective_terms(inst, sol, kind)?;
    Ok(AverageCostBounds {
        lb_per_period: trace.lb / t,
        ub_per_period: trace.ub / t,
        investment_share: if c.total > 0.0 { c.investment / c.total } else { 0.0 },
        investment_per_period: c.investment / t,
        operational_per_period: (c.total - c.investment) / t,
    })
}

/// Append `metric,name,mlb,mub` rows.
pub fn write_metric_rows<W: Write>(mut w: W, bounds: &[MetricBounds]) -> std::io::Result<()> {
    for b in bounds {
        writeln!(w, "metric,{},{},{}", b.name, b.m_lb, b.m_ub)?;
    }
    Ok(())
}
