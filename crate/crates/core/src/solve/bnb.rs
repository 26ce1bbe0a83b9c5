//! Branch-and-bound over bounded binary variables.
//!
//! Open nodes are taken in batches, their relaxations solved (concurrently when
//! enabled), and the results merged in node-id order, so the search is
//! reproducible for a fixed option set.

use log::debug;

use super::convex::{solve_fixed, solve_with_bounds};
use super::{solve_convex, SolveResult, SolveStatus};
use crate::error::{GepError, Result};
use crate::model::CanonicalProblem;
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branching {
    #[default]
    MostFractional,
    LowestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Search {
    #[default]
    BestFirst,
    DepthFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbOptions {
    pub int_tol: f64,
    pub rel_gap: f64,
    pub node_limit: usize,
    pub branching: Branching,
    pub search: Search,
    /// Open nodes solved per round.
    pub batch_size: usize,
    pub execution: Execution,
    /// Initial incumbent: values for the integer variables in index order.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            int_tol: 1e-6,
            rel_gap: 1e-8,
            node_limit: 100_000,
            branching: Branching::MostFractional,
            search: Search::BestFirst,
            batch_size: 8,
            execution: Execution::Parallel,
            warm_start: None,
        }
    }
}

impl BnbOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.int_tol > 0.0 && self.rel_gap > 0.0) {
            return Err(GepError::InvalidArgument("tolerances must be positive".into()));
        }
        if self.batch_size == 0 || self.node_limit == 0 {
            return Err(GepError::InvalidArgument("batch size and node limit must be positive".into()));
        }
        Ok(())
    }
}

struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    /// `(integer position, value)` fixings along the path from the root.
    fixes: Vec<(usize, f64)>,
}

struct Incumbent {
    value: f64,
    result: SolveResult,
}

fn gap_closed(value: f64, bound: f64, rel_gap: f64) -> bool {
    value - bound <= rel_gap * value.abs().max(1.0)
}

/// Minimize a problem whose integer variables are binaries.
pub fn solve_mip(problem: &CanonicalProblem, opts: &BnbOptions) -> Result<SolveResult> {
    opts.validate()?;
    if !problem.has_integers() {
        return solve_convex(problem);
    }
    let ints = problem.integer_vars();
    if let Some(&i) = ints
        .iter()
        .find(|&&i| !(problem.lower[i] >= 0.0 && problem.upper[i] <= 1.0))
    {
        return Err(GepError::InvalidArgument(format!(
            "integer variable {} is not a bounded binary",
            problem.var_name(i)
        )));
    }

    let mut incumbent: Option<Incumbent> = None;
    let mut incumbent_history = Vec::new();
    let try_assignment = |values: &[f64], incumbent: &mut Option<Incumbent>, hist: &mut Vec<f64>| -> Result<()> {
        let res = solve_fixed(problem, &ints, values)?;
        if res.has_solution() && incumbent.as_ref().map_or(true, |inc| res.objective < inc.value) {
            hist.push(res.objective);
            *incumbent = Some(Incumbent {
                value: res.objective,
                result: res,
            });
        }
        Ok(())
    };

    if let Some(w) = &opts.warm_start {
        if w.len() != ints.len() {
            return Err(GepError::Dimension(format!(
                "warm start has {} entries, problem has {} binaries",
                w.len(),
                ints.len()
            )));
        }
        let w: Vec<f64> = w.iter().map(|v| v.round().clamp(0.0, 1.0)).collect();
        try_assignment(&w, &mut incumbent, &mut incumbent_history)?;
    }

    let root = solve_with_bounds(problem, &problem.lower, &problem.upper)?;
    match root.status {
        SolveStatus::Infeasible => {
            let mut r = SolveResult::with_status(SolveStatus::Infeasible, problem.num_vars);
            r.nodes = 1;
            return Ok(r);
        }
        SolveStatus::Unbounded => return Ok(SolveResult::with_status(SolveStatus::Unbounded, problem.num_vars)),
        _ => {}
    }
    // Rounding heuristic: open every binary the relaxation uses.
    let rounded: Vec<f64> = ints
        .iter()
        .map(|&i| if root.primal[i] > opts.int_tol { 1.0 } else { 0.0 })
        .collect();
    try_assignment(&rounded, &mut incumbent, &mut incumbent_history)?;

    let mut open = vec![Node {
        id: 0,
        depth: 0,
        bound: f64::NEG_INFINITY,
        fixes: Vec::new(),
    }];
    let mut pending_root = Some(root);
    let mut next_id = 1;
    let mut nodes = 0;
    let mut bound_history = Vec::new();
    let mut global_lb = f64::NEG_INFINITY;

    loop {
        let open_lb = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        global_lb = global_lb.max(match &incumbent {
            Some(inc) => open_lb.min(inc.value),
            None => open_lb,
        });
        if nodes > 0 {
            bound_history.push(global_lb);
        }
        if let Some(inc) = &incumbent {
            open.retain(|n| !gap_closed(inc.value, n.bound, opts.rel_gap));
            if gap_closed(inc.value, global_lb, opts.rel_gap) {
                open.clear();
            }
        }
        if open.is_empty() {
            break;
        }
        if nodes >= opts.node_limit {
            debug!("node limit {} reached with {} open nodes", opts.node_limit, open.len());
            return Ok(finish(problem, incumbent, global_lb, nodes, bound_history, incumbent_history, true));
        }

        match opts.search {
            Search::BestFirst => open.sort_by(|a, b| a.bound.total_cmp(&b.bound).then(a.id.cmp(&b.id))),
            Search::DepthFirst => open.sort_by(|a, b| b.depth.cmp(&a.depth).then(a.id.cmp(&b.id))),
        }
        let take = opts.batch_size.min(open.len()).min(opts.node_limit - nodes);
        let mut batch: Vec<Node> = open.drain(..take).collect();
        batch.sort_by_key(|n| n.id);

        let results: Vec<Result<SolveResult>> = match pending_root.take() {
            Some(r) => vec![Ok(r)],
            None => par::map(opts.execution, &batch, |node| {
                let mut lower = problem.lower.clone();
                let mut upper = problem.upper.clone();
                for &(k, v) in &node.fixes {
                    lower[ints[k]] = v;
                    upper[ints[k]] = v;
                }
                solve_with_bounds(problem, &lower, &upper)
            }),
        };

        for (node, res) in batch.into_iter().zip(results) {
            nodes += 1;
            let res = res?;
            match res.status {
                SolveStatus::Infeasible => continue,
                SolveStatus::Unbounded => {
                    return Ok(SolveResult::with_status(SolveStatus::Unbounded, problem.num_vars))
                }
                _ => {}
            }
            let bound = node.bound.max(res.bound);
            if let Some(inc) = &incumbent {
                if gap_closed(inc.value, bound, opts.rel_gap) {
                    continue;
                }
            }
            let fractional = ints
                .iter()
                .enumerate()
                .map(|(k, &i)| (k, (res.primal[i] - res.primal[i].round()).abs()))
                .filter(|&(_, f)| f > opts.int_tol);
            let pick = match opts.branching {
                Branching::MostFractional => fractional.fold(None, |best: Option<(usize, f64)>, (k, f)| match best {
                    Some((_, bf)) if bf >= f => best,
                    _ => Some((k, f)),
                }),
                Branching::LowestIndex => fractional.take(1).last(),
            };
            match pick {
                None => {
                    let values: Vec<f64> = ints.iter().map(|&i| res.primal[i].round()).collect();
                    try_assignment(&values, &mut incumbent, &mut incumbent_history)?;
                }
                Some((k, _)) => {
                    for v in [0.0, 1.0] {
                        let mut fixes = node.fixes.clone();
                        fixes.push((k, v));
                        open.push(Node {
                            id: next_id,
                            depth: node.depth + 1,
                            bound,
                            fixes,
                        });
                        next_id += 1;
                    }
                }
            }
        }
    }

    Ok(finish(problem, incumbent, global_lb, nodes, bound_history, incumbent_history, false))
}

fn finish(
    problem: &CanonicalProblem,
    incumbent: Option<Incumbent>,
    global_lb: f64,
    nodes: usize,
    bound_history: Vec<f64>,
    incumbent_history: Vec<f64>,
    hit_limit: bool,
) -> SolveResult {
    let mut out = match incumbent {
        Some(inc) => {
            let mut r = inc.result;
            r.bound = global_lb.min(inc.value);
            r.mip_gap = Some(((inc.value - r.bound) / inc.value.abs().max(1.0)).max(0.0));
            r.status = if hit_limit { SolveStatus::IterationLimit } else { SolveStatus::Optimal };
            r.dual_objective = None;
            r
        }
        None => {
            let status = if hit_limit { SolveStatus::IterationLimit } else { SolveStatus::Infeasible };
            let mut r = SolveResult::with_status(status, problem.num_vars);
            if hit_limit {
                r.bound = global_lb;
            }
            r
        }
    };
    out.nodes = nodes;
    out.bound_history = bound_history;
    out.incumbent_history = incumbent_history;
    out
}
