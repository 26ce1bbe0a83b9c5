//! Convex oracle, branch-and-bound and the enumeration test oracle.

mod bnb;
mod convex;
mod enumerate;
mod external;

pub use bnb::{solve_mip, BnbOptions, Branching, Search};
pub use convex::solve_convex;
pub use enumerate::{enumerate_binaries, MAX_ENUMERATED_BINARIES};
pub use external::{ExternalSolver, EXTERNAL_SOLVER_ENV};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::CanonicalProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Outcome of a convex or mixed-integer solve.
///
/// Duals follow the Lagrangian `f(z) + Σ y_i (e_iᵀz − e_i) + Σ λ_j (f_jᵀz − f_j)`:
/// `λ ≥ 0` on `≤` rows and `∂f*/∂rhs = −dual` for every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    /// Multiplier of the quadratic cost cap, when present.
    pub cap_dual: Option<f64>,
    #[serde(with = "float_or_null")]
    pub objective: f64,
    /// Dual objective of a convex solve.
    pub dual_objective: Option<f64>,
    /// Best proven lower bound.
    #[serde(with = "float_or_null")]
    pub bound: f64,
    /// `(objective − bound) / max(1, |objective|)` for mixed-integer solves.
    pub mip_gap: Option<f64>,
    pub nodes: usize,
    /// Global lower bound after each node batch.
    pub bound_history: Vec<f64>,
    /// Objective of each new incumbent, in discovery order.
    pub incumbent_history: Vec<f64>,
}

impl SolveResult {
    pub(crate) fn with_status(status: SolveStatus, n: usize) -> Self {
        let v = match status {
            SolveStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        Self {
            status,
            primal: vec![0.0; n],
            eq_duals: Vec::new(),
            ineq_duals: Vec::new(),
            cap_dual: None,
            objective: v,
            dual_objective: None,
            bound: v,
            mip_gap: None,
            nodes: 0,
            bound_history: Vec::new(),
            incumbent_history: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Whether `primal` holds a feasible point.
    pub fn has_solution(&self) -> bool {
        self.objective.is_finite() && matches!(self.status, SolveStatus::Optimal | SolveStatus::IterationLimit)
    }
}

/// Which mixed-integer solver serves the higher-level routines.
#[derive(Debug, Clone, Default)]
pub enum SolverConfig {
    #[default]
    BuiltIn,
    WithOptions(BnbOptions),
    External(ExternalSolver),
}

impl SolverConfig {
    /// Built-in solver, or the external adapter named by the environment.
    pub fn from_env() -> Self {
        match ExternalSolver::from_env() {
            Some(ext) => SolverConfig::External(ext),
            None => SolverConfig::BuiltIn,
        }
    }

    pub fn options(&self) -> BnbOptions {
        match self {
            SolverConfig::WithOptions(o) => o.clone(),
            _ => BnbOptions::default(),
        }
    }

    /// Solve `problem`, seeding the incumbent with `warm` binaries when given.
    pub fn solve(&self, problem: &CanonicalProblem, warm: Option<&[f64]>) -> Result<SolveResult> {
        match self {
            SolverConfig::External(ext) => ext.solve(problem),
            _ => {
                let mut opts = self.options();
                opts.warm_start = warm.map(|w| w.to_vec());
                solve_mip(problem, &opts)
            }
        }
    }
}

mod float_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
