//! Convex oracle backed by the Clarabel interior-point solver.
//!
//! The objective squares go into `P`, linear rows into zero and non-negative
//! cones, and the optional quadratic cap into one second-order cone.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use log::warn;
use nalgebra::DMatrix;

use super::{SolveResult, SolveStatus};
use crate::error::{GepError, Result};
use crate::model::{CanonicalProblem, LinExpr};

/// Solve a problem without integrality restrictions.
pub fn solve_convex(problem: &CanonicalProblem) -> Result<SolveResult> {
    if problem.has_integers() {
        return Err(GepError::InvalidArgument(
            "problem has integer variables; use solve_mip or relax it first".into(),
        ));
    }
    solve_with_bounds(problem, &problem.lower, &problem.upper)
}

/// Fix `vars` to `values` and solve the remaining convex problem.
pub(crate) fn solve_fixed(problem: &CanonicalProblem, vars: &[usize], values: &[f64]) -> Result<SolveResult> {
    let mut lower = problem.lower.clone();
    let mut upper = problem.upper.clone();
    for (&i, &v) in vars.iter().zip(values) {
        lower[i] = v;
        upper[i] = v;
    }
    solve_with_bounds(problem, &lower, &upper)
}

const EMPTY_ROW_TOL: f64 = 1e-9;

/// Continuous relaxation of `problem` under overridden variable bounds.
pub(crate) fn solve_with_bounds(problem: &CanonicalProblem, lower: &[f64], upper: &[f64]) -> Result<SolveResult> {
    let n = problem.num_vars;
    check_dims(problem, lower, upper)?;
    check_psd(problem)?;
    if (0..n).any(|i| lower[i] > upper[i]) {
        return Ok(SolveResult::with_status(SolveStatus::Infeasible, n));
    }

    // Fixed variables are substituted out.
    let mut col = vec![usize::MAX; n];
    let mut free = Vec::new();
    for i in 0..n {
        if lower[i] != upper[i] {
            col[i] = free.len();
            free.push(i);
        }
    }
    let nf = free.len();
    let reduce = |e: &LinExpr| -> (Vec<(usize, f64)>, f64) {
        let mut terms = Vec::with_capacity(e.len());
        let mut shift = 0.0;
        for (i, c) in e.iter() {
            if col[i] == usize::MAX {
                shift += c * lower[i];
            } else {
                terms.push((col[i], c));
            }
        }
        (terms, shift)
    };

    // Objective.
    let mut constant = problem.constant;
    let mut q = vec![0.0; nf];
    for i in 0..n {
        if col[i] == usize::MAX {
            constant += problem.linear[i] * lower[i];
        } else {
            q[col[i]] += problem.linear[i];
        }
    }
    let mut p_trip: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    for s in &problem.squares {
        let (terms, shift) = reduce(&s.expr);
        let target = s.target - shift;
        constant += s.weight * target * target;
        for &(a, ca) in &terms {
            q[a] -= 2.0 * s.weight * target * ca;
            for &(b, cb) in &terms {
                if a <= b {
                    *p_trip.entry((a, b)).or_insert(0.0) += 2.0 * s.weight * ca * cb;
                }
            }
        }
    }
    let sigma = 1.0
        / q.iter()
            .map(|v| v.abs())
            .chain(p_trip.values().map(|v| v.abs()))
            .fold(1.0, f64::max);

    // Constraints.
    let mut ai = Vec::new();
    let mut aj = Vec::new();
    let mut av = Vec::new();
    let mut bvec = Vec::new();
    let mut eq_row = vec![None; problem.equalities.len()];
    let mut ineq_row = vec![None; problem.inequalities.len()];
    let push_row = |terms: &[(usize, f64)],
                    rhs: f64,
                    ai: &mut Vec<usize>,
                    aj: &mut Vec<usize>,
                    av: &mut Vec<f64>,
                    bvec: &mut Vec<f64>| {
        let r = bvec.len();
        for &(j, c) in terms {
            ai.push(r);
            aj.push(j);
            av.push(c);
        }
        bvec.push(rhs);
        r
    };
    for (k, row) in problem.equalities.iter().enumerate() {
        let (terms, shift) = reduce(&row.expr);
        let rhs = row.rhs - shift;
        if terms.is_empty() {
            if rhs.abs() > EMPTY_ROW_TOL * (1.0 + row.rhs.abs() + shift.abs()) {
                return Ok(SolveResult::with_status(SolveStatus::Infeasible, n));
            }
            continue;
        }
        eq_row[k] = Some(push_row(&terms, rhs, &mut ai, &mut aj, &mut av, &mut bvec));
    }
    let n_eq = bvec.len();
    for (k, row) in problem.inequalities.iter().enumerate() {
        let (terms, shift) = reduce(&row.expr);
        let rhs = row.rhs - shift;
        if terms.is_empty() {
            if rhs < -EMPTY_ROW_TOL * (1.0 + row.rhs.abs() + shift.abs()) {
                return Ok(SolveResult::with_status(SolveStatus::Infeasible, n));
            }
            continue;
        }
        ineq_row[k] = Some(push_row(&terms, rhs, &mut ai, &mut aj, &mut av, &mut bvec));
    }
    for (j, &i) in free.iter().enumerate() {
        if upper[i].is_finite() {
            push_row(&[(j, 1.0)], upper[i], &mut ai, &mut aj, &mut av, &mut bvec);
        }
        if lower[i].is_finite() {
            push_row(&[(j, -1.0)], -lower[i], &mut ai, &mut aj, &mut av, &mut bvec);
        }
    }
    let n_nonneg = bvec.len() - n_eq;

    // Quadratic cap Σ r_j² ≤ h with h = rhs − k − ℓᵀz, as
    // ‖(2r, h/μ − μ)‖ ≤ h/μ + μ.
    let mut cap_info = None;
    if let Some(cap) = &problem.quad_cap {
        let (lin, shift) = reduce(&cap.linear);
        let mut h0 = cap.rhs - cap.constant - shift;
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        for s in &cap.squares {
            let (terms, sh) = reduce(&s.expr);
            let target = s.target - sh;
            if terms.is_empty() {
                h0 -= s.weight * target * target;
                continue;
            }
            let rw = s.weight.sqrt();
            rows.push((terms.iter().map(|&(j, c)| (j, -2.0 * rw * c)).collect(), -2.0 * rw * target));
        }
        let mu = h0.abs().max(1.0).sqrt();
        let lin_scaled: Vec<(usize, f64)> = lin.iter().map(|&(j, c)| (j, c / mu)).collect();
        let start = bvec.len();
        push_row(&lin_scaled, h0 / mu + mu, &mut ai, &mut aj, &mut av, &mut bvec);
        push_row(&lin_scaled, h0 / mu - mu, &mut ai, &mut aj, &mut av, &mut bvec);
        for (terms, rhs) in &rows {
            push_row(terms, *rhs, &mut ai, &mut aj, &mut av, &mut bvec);
        }
        cap_info = Some((start, mu, rows.len() + 2));
    }

    if nf == 0 {
        return Ok(evaluate_fixed(problem, lower));
    }

    let m = bvec.len();
    let p = CscMatrix::new_from_triplets(
        nf,
        nf,
        p_trip.keys().map(|k| k.0).collect(),
        p_trip.keys().map(|k| k.1).collect(),
        p_trip.values().map(|v| v * sigma).collect(),
    );
    let qs: Vec<f64> = q.iter().map(|v| v * sigma).collect();
    let a = CscMatrix::new_from_triplets(m, nf, ai, aj, av);
    let mut cones = Vec::new();
    if n_eq > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_eq));
    }
    if n_nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
    }
    if let Some((_, _, dim)) = cap_info {
        cones.push(SupportedConeT::SecondOrderConeT(dim));
    }

    let mut solver = DefaultSolver::new(&p, &qs, &a, &bvec, &cones, settings())
        .map_err(|e| GepError::Solver(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;

    let mut primal = lower.to_vec();
    for (j, &i) in free.iter().enumerate() {
        primal[i] = sol.x[j].clamp(lower[i], upper[i]);
    }
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Ok(SolveResult::with_status(SolveStatus::Infeasible, n))
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return Ok(SolveResult::with_status(SolveStatus::Unbounded, n))
        }
        other => {
            let viol = problem.violation(&primal).continuous();
            let scale = 1.0 + bvec.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if viol <= 1e-7 * scale {
                warn!("convex solve ended with {other:?}; accepting point with violation {viol:.2e}");
                SolveStatus::Optimal
            } else if matches!(other, SolverStatus::MaxIterations | SolverStatus::MaxTime) {
                SolveStatus::IterationLimit
            } else {
                return Err(GepError::Solver(format!("{other:?} (violation {viol:.2e})")));
            }
        }
    };

    let eq_duals = eq_row.iter().map(|r| r.map_or(0.0, |r| sol.z[r] / sigma)).collect();
    let ineq_duals = ineq_row.iter().map(|r| r.map_or(0.0, |r| sol.z[r] / sigma)).collect();
    let cap_dual = cap_info.map(|(start, mu, _)| (sol.z[start] + sol.z[start + 1]) / (mu * sigma));
    let objective = problem.objective(&primal);
    let dual_objective = sol.obj_val_dual / sigma + constant;
    Ok(SolveResult {
        status,
        primal,
        eq_duals,
        ineq_duals,
        cap_dual,
        objective,
        dual_objective: Some(dual_objective),
        bound: dual_objective.min(objective),
        mip_gap: None,
        nodes: 0,
        bound_history: Vec::new(),
        incumbent_history: Vec::new(),
    })
}

fn settings() -> DefaultSettings<f64> {
    DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(400)
        .tol_gap_abs(1e-10)
        .tol_gap_rel(1e-10)
        .tol_feas(1e-10)
        .tol_ktratio(1e-8)
        .reduced_tol_gap_abs(1e-7)
        .reduced_tol_gap_rel(1e-7)
        .reduced_tol_feas(1e-7)
        .max_threads(1)
        .build()
        .expect("solver settings")
}

fn evaluate_fixed(problem: &CanonicalProblem, z: &[f64]) -> SolveResult {
    let n = problem.num_vars;
    let v = problem.violation(z);
    if v.cap > EMPTY_ROW_TOL * (1.0 + problem.quad_cap.as_ref().map_or(0.0, |c| c.rhs.abs())) {
        return SolveResult::with_status(SolveStatus::Infeasible, n);
    }
    let obj = problem.objective(z);
    SolveResult {
        status: SolveStatus::Optimal,
        primal: z.to_vec(),
        eq_duals: vec![0.0; problem.equalities.len()],
        ineq_duals: vec![0.0; problem.inequalities.len()],
        cap_dual: problem.quad_cap.as_ref().map(|_| 0.0),
        objective: obj,
        dual_objective: Some(obj),
        bound: obj,
        mip_gap: None,
        nodes: 0,
        bound_history: Vec::new(),
        incumbent_history: Vec::new(),
    }
}

fn check_dims(problem: &CanonicalProblem, lower: &[f64], upper: &[f64]) -> Result<()> {
    let n = problem.num_vars;
    let ok = problem.linear.len() == n
        && problem.lower.len() == n
        && problem.upper.len() == n
        && problem.integer.len() == n
        && lower.len() == n
        && upper.len() == n;
    let in_range = |e: &LinExpr| e.idx.iter().all(|&i| i < n);
    let rows_ok = problem
        .equalities
        .iter()
        .chain(&problem.inequalities)
        .all(|r| in_range(&r.expr))
        && problem.squares.iter().all(|s| in_range(&s.expr))
        && problem.quad_cap.as_ref().map_or(true, |c| {
            in_range(&c.linear) && c.squares.iter().all(|s| in_range(&s.expr))
        });
    if ok && rows_ok {
        Ok(())
    } else {
        Err(GepError::Dimension("canonical problem arrays are inconsistent".into()))
    }
}

/// Squares with non-negative weights are PSD by construction; otherwise check
/// the Hessian spectrum.
fn check_psd(problem: &CanonicalProblem) -> Result<()> {
    if let Some(cap) = &problem.quad_cap {
        if cap.squares.iter().any(|s| s.weight < 0.0 || !s.weight.is_finite()) {
            return Err(GepError::NotPsd("quadratic cap has a negative weight".into()));
        }
    }
    if problem.squares.iter().all(|s| s.weight >= 0.0 && s.weight.is_finite()) {
        return Ok(());
    }
    let n = problem.num_vars;
    if n > 4000 {
        return Err(GepError::NotPsd("negative square weights on a large problem".into()));
    }
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in problem.hessian_upper() {
        h[(i, j)] += v;
        if i != j {
            h[(j, i)] += v;
        }
    }
    let scale = h.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let min_eig = h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 * scale {
        return Err(GepError::NotPsd(format!("smallest Hessian eigenvalue {min_eig:.3e}")));
    }
    Ok(())
}
