//! Classical single-cut Benders decomposition.
//!
//! The master holds `(x, b)` and an epigraph variable `θ ≥ 0`; the subproblem
//! is the operational model at fixed capacities. Non-supplied demand gives
//! complete recourse, so only optimality cuts are generated.

use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::bounds::{optimality_gap, BoundsRecord, BoundsTrace, Termination};
use crate::error::{GepError, Result};
use crate::instance::GepInstance;
use crate::model::{build_subproblem, residuals, CanonicalProblem, FullSolution, LinExpr, ModelKind, RowTag};
use crate::solve::{solve_convex, SolverConfig};

/// `θ ≥ constant + coefficients · (x, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersCut {
    pub constant: f64,
    /// Length `2(G + N)`: capacities first, then binaries.
    pub coefficients: Vec<f64>,
}

impl BendersCut {
    pub fn eval(&self, x: &[f64], b: &[f64]) -> f64 {
        self.constant + self.coefficients.iter().zip(x.iter().chain(b)).map(|(c, v)| c * v).sum::<f64>()
    }
}

fn check_first_stage(inst: &GepInstance, x: &[f64], b: &[f64]) -> Result<()> {
    let na = inst.num_assets();
    if x.len() != na || b.len() != na {
        return Err(GepError::Dimension(format!("first-stage vectors must have length {na}")));
    }
    for i in 0..na {
        let tol = 1e-9 * (1.0 + inst.x_max[i]);
        if b[i] != 0.0 && b[i] != 1.0 {
            return Err(GepError::InvalidArgument(format!("b[{i}] = {} is not binary", b[i])));
        }
        if x[i] < b[i] * inst.x_min[i] - tol || x[i] > b[i] * inst.x_max[i] + tol {
            return Err(GepError::InvalidArgument(format!(
                "x[{i}] = {} violates its investment limits",
                x[i]
            )));
        }
    }
    Ok(())
}

/// Operational optimum at fixed capacities with the cut built from its duals,
/// together with the full-scale solution it induces.
pub(crate) fn solve_subproblem(
    inst: &GepInstance,
    x: &[f64],
    b: &[f64],
    kind: ModelKind,
) -> Result<(f64, BendersCut, FullSolution)> {
    check_first_stage(inst, x, b)?;
    let (g, n, t) = (inst.g(), inst.n(), inst.t());
    let sub = build_subproblem(inst, x, kind)?;
    let res = solve_convex(&sub)?;
    if !res.is_optimal() {
        return Err(GepError::Solver(format!("subproblem returned {:?}", res.status)));
    }
    let na = g + n;
    let mut grad = vec![0.0; na];
    for (row, &lam) in sub.inequalities.iter().zip(&res.ineq_duals) {
        match row.tag {
            RowTag::StorageCap { n: m, .. } => grad[g + m] -= inst.delta * lam,
            RowTag::GenCap { t: k, g: j } => grad[j] -= inst.cap_factor[k][j] * lam,
            _ => {}
        }
    }
    let value = res.objective;
    let constant = value - grad.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    let mut coefficients = grad;
    coefficients.extend(std::iter::repeat(0.0).take(na));

    let layout = sub.layout.as_ref().expect("layout");
    let z = &res.primal;
    let sol = FullSolution {
        x: x.to_vec(),
        b: b.to_vec(),
        p: (0..t).map(|k| (0..g).map(|j| z[layout.p(k, j)]).collect()).collect(),
        s: (0..=t).map(|k| (0..n).map(|m| z[layout.s(k, m)]).collect()).collect(),
        p_c: (0..t).map(|k| (0..n).map(|m| z[layout.pc(k, m)]).collect()).collect(),
        p_d: (0..t).map(|k| (0..n).map(|m| z[layout.pd(k, m)]).collect()).collect(),
        d_ns: (0..t).map(|k| z[layout.dns(k)]).collect(),
    };
    Ok((value, BendersCut { constant, coefficients }, sol))
}

/// Operational value at `(x, b)` and the optimality cut tight there.
pub fn subproblem_cut(inst: &GepInstance, x: &[f64], b: &[f64], kind: ModelKind) -> Result<(f64, BendersCut)> {
    let (v, cut, _) = solve_subproblem(inst, x, b, kind)?;
    Ok((v, cut))
}

/// Unit of the master's epigraph variable: the operational cost of shedding
/// all demand, so the scaled variable stays of order one.
pub fn theta_scale(inst: &GepInstance) -> f64 {
    (inst.c_ns * inst.demand.iter().sum::<f64>()).max(1.0)
}

/// Master over `(x, b, θ / theta_scale)` with the given cuts.
pub fn build_master(inst: &GepInstance, cuts: &[BendersCut]) -> CanonicalProblem {
    let na = inst.num_assets();
    let theta = 2 * na;
    let scale = theta_scale(inst);
    let mut p = CanonicalProblem::new(2 * na + 1);
    for i in 0..na {
        p.linear[i] = inst.c_inv[i];
        p.lower[i] = 0.0;
        p.upper[i] = inst.x_max[i];
        p.lower[na + i] = 0.0;
        p.upper[na + i] = 1.0;
        p.integer[na + i] = true;
        p.add_le(
            LinExpr::new().term(na + i, inst.x_min[i]).term(i, -1.0),
            0.0,
            RowTag::InvLower { i },
        );
        p.add_le(
            LinExpr::new().term(i, 1.0).term(na + i, -inst.x_max[i]),
            0.0,
            RowTag::InvUpper { i },
        );
    }
    p.linear[theta] = scale;
    p.lower[theta] = 0.0;
    for (j, cut) in cuts.iter().enumerate() {
        let mut e = LinExpr::new();
        for (i, &c) in cut.coefficients.iter().enumerate() {
            e.push(i, c / scale);
        }
        e.push(theta, -1.0);
        p.add_le(e, -cut.constant / scale, RowTag::Cut { j });
    }
    p
}

#[derive(Debug, Clone)]
pub struct BendersOptions {
    pub kind: ModelKind,
    pub eps_thr: f64,
    pub max_iter: usize,
    pub solver: SolverConfig,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self {
            kind: ModelKind::Milp,
            eps_thr: 0.01,
            max_iter: 1000,
            solver: SolverConfig::BuiltIn,
        }
    }
}

/// Trace column `K` holds the number of cuts in the master at that iteration.
pub fn run_benders(inst: &GepInstance, opts: &BendersOptions) -> Result<BoundsTrace> {
    inst.validate()?;
    if !(opts.eps_thr > 0.0) {
        return Err(GepError::InvalidArgument("eps_thr must be positive".into()));
    }
    let na = inst.num_assets();
    let mut trace = BoundsTrace {
        lb: f64::NEG_INFINITY,
        ub: f64::INFINITY,
        ..Default::default()
    };
    let mut cuts: Vec<BendersCut> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let abort = |msg: String, trace: &BoundsTrace| GepError::Aborted {
        message: msg,
        trace: Box::new(trace.clone()),
    };

    for i in 0..opts.max_iter {
        let start = Instant::now();
        let master = build_master(inst, &cuts);
        let mres = opts
            .solver
            .solve(&master, warm.as_deref())
            .map_err(|e| abort(format!("master solve failed at iteration {i}: {e}"), &trace))?;
        if !mres.has_solution() {
            return Err(abort(format!("master returned {:?} at iteration {i}", mres.status), &trace));
        }
        let b: Vec<f64> = mres.primal[na..2 * na].iter().map(|v| v.round().clamp(0.0, 1.0)).collect();
        let x: Vec<f64> = (0..na)
            .map(|j| mres.primal[j].clamp(b[j] * inst.x_min[j], b[j] * inst.x_max[j]))
            .collect();
        let lb_cand = mres.bound;
        let (value, cut, sol) = solve_subproblem(inst, &x, &b, opts.kind)
            .map_err(|e| abort(format!("subproblem failed at iteration {i}: {e}"), &trace))?;
        let inv: f64 = inst.c_inv.iter().zip(&x).map(|(c, v)| c * v).sum();
        let ub_cand = inv + value;
        let residual = residuals(inst, &sol)
            .map_err(|e| abort(format!("residual check failed at iteration {i}: {e}"), &trace))?
            .max();
        trace.lb = trace.lb.max(lb_cand);
        if ub_cand < trace.ub {
            trace.ub = ub_cand;
            trace.solution = Some(sol);
        }
        let gap = optimality_gap(trace.ub, trace.lb.min(trace.ub))?;
        trace.records.push(BoundsRecord {
            iter: i,
            k: cuts.len(),
            lb_cand,
            ub_cand,
            lb: trace.lb,
            ub: trace.ub,
            gap,
            ms: start.elapsed().as_secs_f64() * 1e3,
            residual,
        });
        info!("benders {i}: lb={:.6e} ub={:.6e} gap={gap:.3e}", trace.lb, trace.ub);
        if gap <= opts.eps_thr {
            trace.termination = Termination::Threshold;
            break;
        }
        cuts.push(cut);
        warm = Some(b);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GenConfig};

    #[test]
    fn zero_capacity_sheds_everything() {
        let inst = generate_instance(&GenConfig::new(2, 2, 12, 3)).unwrap();
        let zero = vec![0.0; 4];
        let (v, cut) = subproblem_cut(&inst, &zero, &zero, ModelKind::Milp).unwrap();
        let shed = inst.c_ns * inst.demand.iter().sum::<f64>();
        assert!((v - shed).abs() <= 1e-7 * shed);
        assert!((cut.eval(&zero, &zero) - v).abs() <= 1e-7 * shed);
        assert!(cut.coefficients[4..].iter().all(|&c| c == 0.0));
        let (v2, cut2) = subproblem_cut(&inst, &zero, &zero, ModelKind::Milp).unwrap();
        assert_eq!((v, &cut), (v2, &cut2));
    }

    #[test]
    fn first_iteration_lower_bound_is_zero() {
        let inst = generate_instance(&GenConfig::new(1, 1, 6, 2)).unwrap();
        let trace = run_benders(&inst, &BendersOptions { max_iter: 1, ..Default::default() }).unwrap();
        assert!(trace.records[0].lb_cand.abs() < 1e-5);
        assert!(subproblem_cut(&inst, &[0.5, 0.0], &[0.0, 0.0], ModelKind::Milp).is_err());
    }
}
