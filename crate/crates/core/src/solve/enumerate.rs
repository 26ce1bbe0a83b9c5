use super::convex::solve_fixed;
use super::{solve_convex, SolveResult, SolveStatus};
use crate::error::{GepError, Result};
use crate::model::CanonicalProblem;
use crate::par::{self, Execution};

pub const MAX_ENUMERATED_BINARIES: usize = 20;

/// Solve the convex restriction for every binary assignment and keep the best.
/// Ties go to the assignment with the lowest bit pattern.
pub fn enumerate_binaries(problem: &CanonicalProblem, exec: Execution) -> Result<SolveResult> {
    let ints = problem.integer_vars();
    if ints.len() > MAX_ENUMERATED_BINARIES {
        return Err(GepError::TooManyBinaries(ints.len()));
    }
    if ints.is_empty() {
        return solve_convex(problem);
    }
    let count = 1usize << ints.len();
    let results = par::map_range(exec, count, |mask| {
        let values: Vec<f64> = (0..ints.len()).map(|k| ((mask >> k) & 1) as f64).collect();
        solve_fixed(problem, &ints, &values)
    });
    let mut best: Option<SolveResult> = None;
    for r in results {
        let r = r?;
        if r.status == SolveStatus::Unbounded {
            return Ok(r);
        }
        if r.has_solution() && best.as_ref().map_or(true, |b| r.objective < b.objective) {
            best = Some(r);
        }
    }
    Ok(match best {
        Some(mut b) => {
            b.nodes = count;
            b.bound = b.objective;
            b.mip_gap = Some(0.0);
            b.dual_objective = None;
            b
        }
        None => {
            let mut r = SolveResult::with_status(SolveStatus::Infeasible, problem.num_vars);
            r.nodes = count;
            r
        }
    })
}
