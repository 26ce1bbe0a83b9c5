//! Full-scale, restricted and metric-specific GEP models.

pub(crate) mod build;
pub mod canonical;
pub mod layout;

use serde::{Deserialize, Serialize};

pub use canonical::{CanonicalProblem, LinExpr, QuadCap, Row, RowTag, SquareTerm, Violation};
pub use layout::ModelLayout;

use crate::error::{GepError, Result};
use crate::instance::GepInstance;
use crate::metrics::MetricSpec;
use build::{assemble, Investment, PeriodData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Linear costs only.
    Milp,
    /// Linear costs plus the quadratic reference-tracking penalty.
    Miqp,
}

impl std::str::FromStr for ModelKind {
    type Err = GepError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "milp" => Ok(ModelKind::Milp),
            "miqp" => Ok(ModelKind::Miqp),
            other => Err(GepError::InvalidArgument(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Min,
    Max,
}

/// Decision vector of a full-scale model.
///
/// `s` has `T + 1` rows: `s[0]` is the initial state and `s[T]` the terminal one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullSolution {
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub p_c: Vec<Vec<f64>>,
    pub p_d: Vec<Vec<f64>>,
    pub d_ns: Vec<f64>,
}

impl FullSolution {
    pub fn zeros(inst: &GepInstance) -> Self {
        let (g, n, t) = (inst.g(), inst.n(), inst.t());
        Self {
            x: vec![0.0; g + n],
            b: vec![0.0; g + n],
            p: vec![vec![0.0; g]; t],
            s: vec![vec![0.0; n]; t + 1],
            p_c: vec![vec![0.0; n]; t],
            p_d: vec![vec![0.0; n]; t],
            d_ns: vec![0.0; t],
        }
    }

    pub fn num_periods(&self) -> usize {
        self.d_ns.len()
    }

    /// Operational vector `(p, d_ns, s, p_c, p_d)` of period `t`.
    pub fn op_vector(&self, t: usize) -> Vec<f64> {
        let mut v = self.p[t].clone();
        v.push(self.d_ns[t]);
        v.extend_from_slice(&self.s[t]);
        v.extend_from_slice(&self.p_c[t]);
        v.extend_from_slice(&self.p_d[t]);
        v
    }

    /// Inner product with another solution-shaped vector.
    pub fn dot(&self, other: &FullSolution) -> f64 {
        fn d1(a: &[f64], b: &[f64]) -> f64 {
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        }
        fn d2(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
            a.iter().zip(b).map(|(x, y)| d1(x, y)).sum()
        }
        d1(&self.x, &other.x)
            + d1(&self.b, &other.b)
            + d2(&self.p, &other.p)
            + d2(&self.s, &other.s)
            + d2(&self.p_c, &other.p_c)
            + d2(&self.p_d, &other.p_d)
            + d1(&self.d_ns, &other.d_ns)
    }

    /// Place this solution into a full-scale canonical vector.
    pub fn encode(&self, layout: &ModelLayout) -> Vec<f64> {
        let mut z = vec![0.0; layout.num_vars()];
        self.encode_into(layout, &mut z);
        z
    }

    pub(crate) fn encode_into(&self, layout: &ModelLayout, z: &mut [f64]) {
        let (g, n) = (layout.g, layout.n);
        if layout.has_investment {
            for i in 0..g + n {
                z[layout.x(i)] = self.x[i];
                z[layout.b(i)] = self.b[i];
            }
        }
        for t in 0..layout.periods {
            for j in 0..g {
                z[layout.p(t, j)] = self.p[t][j];
            }
            for m in 0..n {
                z[layout.pc(t, m)] = self.p_c[t][m];
                z[layout.pd(t, m)] = self.p_d[t][m];
            }
            z[layout.dns(t)] = self.d_ns[t];
        }
        for t in 0..=layout.periods {
            for m in 0..n {
                z[layout.s(t, m)] = self.s[t][m];
            }
        }
    }

    /// Sparse form of this vector as a linear functional over `layout`.
    pub fn as_functional(&self, layout: &ModelLayout) -> LinExpr {
        let dense = self.encode(layout);
        let mut e = LinExpr::new();
        for (i, v) in dense.into_iter().enumerate() {
            e.push(i, v);
        }
        e
    }
}

/// Cost terms of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub investment: f64,
    pub operational: f64,
    pub non_supplied: f64,
    pub quadratic_penalty: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn linear_total(&self) -> f64 {
        self.investment + self.operational + self.non_supplied
    }
}

/// Largest residual per constraint family of a full-scale solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub balance: f64,
    pub dynamics: f64,
    pub initial: f64,
    pub storage_power: f64,
    pub storage_capacity: f64,
    pub generation: f64,
    pub investment: f64,
    pub nonnegativity: f64,
    pub binary: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [
            self.balance,
            self.dynamics,
            self.initial,
            self.storage_power,
            self.storage_capacity,
            self.generation,
            self.investment,
            self.nonnegativity,
            self.binary,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Full-scale model over all `T` periods.
pub fn build_full(inst: &GepInstance, kind: ModelKind) -> Result<CanonicalProblem> {
    inst.validate()?;
    Ok(assemble(inst, &PeriodData::full(inst), kind, Investment::Free))
}

/// Full-scale model with the binaries fixed; a convex problem.
pub fn build_restricted(inst: &GepInstance, b_fixed: &[f64], kind: ModelKind) -> Result<CanonicalProblem> {
    inst.validate()?;
    check_binary_vector(inst, b_fixed)?;
    Ok(assemble(inst, &PeriodData::full(inst), kind, Investment::FixedBinaries(b_fixed)))
}

pub(crate) fn check_binary_vector(inst: &GepInstance, b: &[f64]) -> Result<()> {
    if b.len() != inst.num_assets() {
        return Err(GepError::Dimension(format!(
            "binary vector has length {}, expected {}",
            b.len(),
            inst.num_assets()
        )));
    }
    if let Some(v) = b.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(GepError::InvalidArgument(format!("binary entry {v} is not 0 or 1")));
    }
    Ok(())
}

/// Operational model at fixed capacities `x`. The objective excludes
/// investment cost.
pub fn build_subproblem(inst: &GepInstance, x_fixed: &[f64], kind: ModelKind) -> Result<CanonicalProblem> {
    inst.validate()?;
    if x_fixed.len() != inst.num_assets() {
        return Err(GepError::Dimension(format!(
            "capacity vector has length {}, expected {}",
            x_fixed.len(),
            inst.num_assets()
        )));
    }
    Ok(assemble(inst, &PeriodData::full(inst), kind, Investment::FixedCapacity(x_fixed)))
}

/// Optimize `metric` over full-scale solutions whose cost is at most `j_ub`.
///
/// The lower cost bound `J ≥ J_LB` is not imposed: every feasible point already
/// satisfies `J(z) ≥ J* ≥ J_LB`.
pub fn build_metric_model(
    inst: &GepInstance,
    metric: &MetricSpec,
    sense: Sense,
    j_ub: f64,
    kind: ModelKind,
) -> Result<CanonicalProblem> {
    if !j_ub.is_finite() {
        return Err(GepError::InvalidArgument("cost cap must be finite".into()));
    }
    metric.check(inst)?;
    let data = PeriodData::full(inst);
    let mut prob = assemble(inst, &data, kind, Investment::Free);
    set_metric_objective(&mut prob, metric, sense);
    build::add_cost_cap(&mut prob, inst, &data, kind, j_ub);
    Ok(prob)
}

pub(crate) fn set_metric_objective(prob: &mut CanonicalProblem, metric: &MetricSpec, sense: Sense) {
    let layout = prob.layout.clone().expect("model layout");
    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    prob.linear.iter_mut().for_each(|c| *c = 0.0);
    prob.squares.clear();
    prob.constant = 0.0;
    for (i, c) in metric.weights.as_functional(&layout).iter() {
        prob.linear[i] = sign * c;
    }
}

/// Read a full-scale solution back out of a primal vector.
pub fn decode_solution(problem: &CanonicalProblem, primal: &[f64]) -> Result<FullSolution> {
    let layout = problem
        .layout
        .as_ref()
        .ok_or_else(|| GepError::InvalidArgument("problem carries no model layout".into()))?;
    if primal.len() != problem.num_vars {
        return Err(GepError::Dimension(format!(
            "primal has length {}, problem has {} variables",
            primal.len(),
            problem.num_vars
        )));
    }
    decode_with(layout, primal)
}

pub(crate) fn decode_with(layout: &ModelLayout, z: &[f64]) -> Result<FullSolution> {
    if !layout.has_investment {
        return Err(GepError::InvalidArgument("subproblem vectors carry no investment block".into()));
    }
    let (g, n, t) = (layout.g, layout.n, layout.periods);
    Ok(FullSolution {
        x: (0..g + n).map(|i| z[layout.x(i)]).collect(),
        b: (0..g + n).map(|i| z[layout.b(i)]).collect(),
        p: (0..t).map(|k| (0..g).map(|j| z[layout.p(k, j)]).collect()).collect(),
        s: (0..=t).map(|k| (0..n).map(|m| z[layout.s(k, m)]).collect()).collect(),
        p_c: (0..t).map(|k| (0..n).map(|m| z[layout.pc(k, m)]).collect()).collect(),
        p_d: (0..t).map(|k| (0..n).map(|m| z[layout.pd(k, m)]).collect()).collect(),
        d_ns: (0..t).map(|k| z[layout.dns(k)]).collect(),
    })
}

fn check_shape(inst: &GepInstance, sol: &FullSolution) -> Result<()> {
    let (g, n, t) = (inst.g(), inst.n(), inst.t());
    let ok = sol.x.len() == g + n
        && sol.b.len() == g + n
        && sol.p.len() == t
        && sol.p.iter().all(|r| r.len() == g)
        && sol.s.len() == t + 1
        && sol.s.iter().all(|r| r.len() == n)
        && sol.p_c.len() == t
        && sol.p_c.iter().all(|r| r.len() == n)
        && sol.p_d.len() == t
        && sol.p_d.iter().all(|r| r.len() == n)
        && sol.d_ns.len() == t;
    if ok {
        Ok(())
    } else {
        Err(GepError::Dimension("solution shape does not match instance".into()))
    }
}

/// `Σ_t ‖A z_op[t] − Z_ref[t]‖²`
pub fn penalty_value(inst: &GepInstance, sol: &FullSolution) -> f64 {
    (0..inst.t())
        .map(|t| {
            let op = sol.op_vector(t);
            inst.penalty_matrix
                .iter()
                .zip(&inst.z_ref[t])
                .map(|(row, r)| {
                    let v: f64 = row.iter().zip(&op).map(|(a, z)| a * z).sum::<f64>() - r;
                    v * v
                })
                .sum::<f64>()
        })
        .sum()
}

/// Cost terms evaluated directly from the model equations.
pub fn objective_terms(inst: &GepInstance, sol: &FullSolution, kind: ModelKind) -> Result<CostBreakdown> {
    check_shape(inst, sol)?;
    let investment: f64 = inst.c_inv.iter().zip(&sol.x).map(|(c, x)| c * x).sum();
    let operational: f64 = sol
        .p
        .iter()
        .map(|row| row.iter().zip(&inst.c_p).map(|(p, c)| c * p * inst.delta).sum::<f64>())
        .sum();
    let non_supplied = inst.c_ns * sol.d_ns.iter().sum::<f64>();
    let quadratic_penalty = match kind {
        ModelKind::Milp => 0.0,
        ModelKind::Miqp => penalty_value(inst, sol),
    };
    Ok(CostBreakdown {
        investment,
        operational,
        non_supplied,
        quadratic_penalty,
        total: investment + operational + non_supplied + quadratic_penalty,
    })
}

/// Constraint residuals evaluated directly from the model equations.
pub fn residuals(inst: &GepInstance, sol: &FullSolution) -> Result<Residuals> {
    check_shape(inst, sol)?;
    let (g, n, t) = (inst.g(), inst.n(), inst.t());
    let d = inst.delta;
    let mut r = Residuals::default();
    let neg = |v: f64| (-v).max(0.0);
    for k in 0..t {
        let supply: f64 = sol.p[k].iter().sum::<f64>() * d
            + (0..n).map(|m| sol.p_d[k][m] - sol.p_c[k][m]).sum::<f64>() * d
            + sol.d_ns[k];
        r.balance = r.balance.max((supply - inst.demand[k]).abs());
        r.nonnegativity = r.nonnegativity.max(neg(sol.d_ns[k]));
        for m in 0..n {
            let next = sol.s[k][m] + (inst.eta_c[m] * sol.p_c[k][m] - inst.eta_d[m] * sol.p_d[k][m]) * d;
            r.dynamics = r.dynamics.max((sol.s[k + 1][m] - next).abs());
            let (clo, chi) = inst.charge_limits(m);
            let (dlo, dhi) = inst.discharge_limits(m);
            r.storage_power = r
                .storage_power
                .max(clo - sol.p_c[k][m])
                .max(sol.p_c[k][m] - chi)
                .max(dlo - sol.p_d[k][m])
                .max(sol.p_d[k][m] - dhi);
        }
        for j in 0..g {
            r.generation = r.generation.max(sol.p[k][j] - inst.cap_factor[k][j] * sol.x[j]);
            r.nonnegativity = r.nonnegativity.max(neg(sol.p[k][j]));
        }
    }
    for m in 0..n {
        r.initial = r.initial.max((sol.s[0][m] - inst.s0[m]).abs());
        for k in 0..=t {
            r.storage_capacity = r.storage_capacity.max(sol.s[k][m] - sol.x[g + m] * d);
            r.nonnegativity = r.nonnegativity.max(neg(sol.s[k][m]));
        }
    }
    for i in 0..g + n {
        r.investment = r
            .investment
            .max(sol.b[i] * inst.x_min[i] - sol.x[i])
            .max(sol.x[i] - sol.b[i] * inst.x_max[i]);
        r.nonnegativity = r.nonnegativity.max(neg(sol.x[i]));
        r.binary = r.binary.max(sol.b[i].min((1.0 - sol.b[i]).abs()).abs());
    }
    Ok(r)
}
