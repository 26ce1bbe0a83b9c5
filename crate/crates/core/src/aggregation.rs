//! Aggregated models over a chronological partition and the map from full-scale
//! solutions to aggregated ones.
//!
//! Storage states in the reference penalty need care. Penalising the
//! cluster-start state `ŝ_k` with weight `T_k` can exceed the full-scale penalty
//! of the same trajectory, so the aggregated MIQP would no longer bound the
//! full one from below. [`StateMode::ClusterMean`] (the default) gives each
//! multi-period cluster a mean-state variable `s̄_k` used only in the penalty and
//! tied to the boundary states by bounds that every full-scale trajectory
//! satisfies.

use serde::{Deserialize, Serialize};

use crate::clustering::ChronoPartition;
use crate::error::{GepError, Result};
use crate::instance::GepInstance;
use crate::model::build::{assemble, Investment, PeriodData};
use crate::model::{check_binary_vector, CanonicalProblem, FullSolution, ModelKind, ModelLayout};

/// Per-cluster weights and mean inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedParams {
    pub weights: Vec<f64>,
    pub demand: Vec<f64>,
    pub cap_factor: Vec<Vec<f64>>,
    pub z_ref: Vec<Vec<f64>>,
}

/// Which storage state enters the penalty of a multi-period cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StateMode {
    /// Separate mean-state variable per cluster; keeps the lower-bound property.
    #[default]
    ClusterMean,
    /// The cluster-start state `ŝ_k`.
    ClusterStart,
}

fn mean_rows(rows: &[Vec<f64>], a: usize, b: usize) -> Vec<f64> {
    let w = (b - a) as f64;
    let width = rows.first().map_or(0, |r| r.len());
    (0..width).map(|j| rows[a..b].iter().map(|r| r[j]).sum::<f64>() / w).collect()
}

fn mean(v: &[f64], a: usize, b: usize) -> f64 {
    v[a..b].iter().sum::<f64>() / (b - a) as f64
}

pub fn aggregate_params(inst: &GepInstance, partition: &ChronoPartition) -> Result<AggregatedParams> {
    partition.check_len(inst.t())?;
    let r = partition.ranges();
    Ok(AggregatedParams {
        weights: r.iter().map(|(a, b)| (b - a) as f64).collect(),
        demand: r.iter().map(|&(a, b)| mean(&inst.demand, a, b)).collect(),
        cap_factor: r.iter().map(|&(a, b)| mean_rows(&inst.cap_factor, a, b)).collect(),
        z_ref: r.iter().map(|&(a, b)| mean_rows(&inst.z_ref, a, b)).collect(),
    })
}

fn period_data(inst: &GepInstance, partition: &ChronoPartition, kind: ModelKind, mode: StateMode) -> Result<PeriodData> {
    let p = aggregate_params(inst, partition)?;
    let use_mean = mode == StateMode::ClusterMean && kind == ModelKind::Miqp && inst.penalty_uses_states();
    Ok(PeriodData {
        mean_state: p.weights.iter().map(|&w| use_mean && w >= 2.0).collect(),
        weights: p.weights,
        demand: p.demand,
        cap_factor: p.cap_factor,
        z_ref: p.z_ref,
    })
}

/// Aggregated model with the default state mode.
pub fn build_aggregated(inst: &GepInstance, partition: &ChronoPartition, kind: ModelKind) -> Result<CanonicalProblem> {
    build_aggregated_with(inst, partition, kind, StateMode::default())
}

pub fn build_aggregated_with(
    inst: &GepInstance,
    partition: &ChronoPartition,
    kind: ModelKind,
    mode: StateMode,
) -> Result<CanonicalProblem> {
    inst.validate()?;
    let data = period_data(inst, partition, kind, mode)?;
    Ok(assemble(inst, &data, kind, Investment::Free))
}

/// Aggregated model with binaries fixed.
pub fn build_aggregated_restricted(
    inst: &GepInstance,
    partition: &ChronoPartition,
    b_fixed: &[f64],
    kind: ModelKind,
) -> Result<CanonicalProblem> {
    inst.validate()?;
    check_binary_vector(inst, b_fixed)?;
    let data = period_data(inst, partition, kind, StateMode::default())?;
    Ok(assemble(inst, &data, kind, Investment::FixedBinaries(b_fixed)))
}

/// Decision vector of an aggregated model (`K` periods, `K + 1` states).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggSolution {
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub p_c: Vec<Vec<f64>>,
    pub p_d: Vec<Vec<f64>>,
    pub d_ns: Vec<f64>,
    /// Mean state of each cluster over its member periods.
    pub s_mean: Vec<Vec<f64>>,
}

impl AggSolution {
    fn as_full(&self) -> FullSolution {
        FullSolution {
            x: self.x.clone(),
            b: self.b.clone(),
            p: self.p.clone(),
            s: self.s.clone(),
            p_c: self.p_c.clone(),
            p_d: self.p_d.clone(),
            d_ns: self.d_ns.clone(),
        }
    }

    /// Canonical vector for a model built with `layout`.
    pub fn encode(&self, layout: &ModelLayout) -> Vec<f64> {
        let mut z = vec![0.0; layout.num_vars()];
        self.as_full().encode_into(layout, &mut z);
        for k in 0..layout.periods {
            for m in 0..layout.n {
                if let Some(i) = layout.mean_state(k, m) {
                    z[i] = self.s_mean[k][m];
                }
            }
        }
        z
    }

    /// Operational vector of cluster `k` with the chosen state.
    pub fn op_vector(&self, k: usize, use_mean: bool) -> Vec<f64> {
        let mut v = self.p[k].clone();
        v.push(self.d_ns[k]);
        v.extend_from_slice(if use_mean { &self.s_mean[k] } else { &self.s[k] });
        v.extend_from_slice(&self.p_c[k]);
        v.extend_from_slice(&self.p_d[k]);
        v
    }
}

/// Read an aggregated solution out of a primal vector.
pub fn decode_aggregated(problem: &CanonicalProblem, primal: &[f64]) -> Result<AggSolution> {
    let layout = problem
        .layout
        .as_ref()
        .ok_or_else(|| GepError::InvalidArgument("problem carries no model layout".into()))?;
    if primal.len() != problem.num_vars {
        return Err(GepError::Dimension("primal length does not match problem".into()));
    }
    let f = crate::model::decode_with(layout, primal)?;
    let s_mean = (0..layout.periods)
        .map(|k| {
            (0..layout.n)
                .map(|m| layout.mean_state(k, m).map_or(f.s[k][m], |i| primal[i]))
                .collect()
        })
        .collect();
    Ok(AggSolution {
        x: f.x,
        b: f.b,
        p: f.p,
        s: f.s,
        p_c: f.p_c,
        p_d: f.p_d,
        d_ns: f.d_ns,
        s_mean,
    })
}

/// Map a full-scale solution onto the partition: investment copied, states
/// sampled at cluster starts (plus the terminal state), everything else averaged.
pub fn aggregate_solution(inst: &GepInstance, partition: &ChronoPartition, z: &FullSolution) -> Result<AggSolution> {
    partition.check_len(inst.t())?;
    if z.num_periods() != inst.t() || z.s.len() != inst.t() + 1 || z.x.len() != inst.num_assets() {
        return Err(GepError::Dimension("solution does not match instance".into()));
    }
    let r = partition.ranges();
    let mut s: Vec<Vec<f64>> = r.iter().map(|&(a, _)| z.s[a].clone()).collect();
    s.push(z.s[inst.t()].clone());
    Ok(AggSolution {
        x: z.x.clone(),
        b: z.b.clone(),
        p: r.iter().map(|&(a, b)| mean_rows(&z.p, a, b)).collect(),
        s,
        p_c: r.iter().map(|&(a, b)| mean_rows(&z.p_c, a, b)).collect(),
        p_d: r.iter().map(|&(a, b)| mean_rows(&z.p_d, a, b)).collect(),
        d_ns: r.iter().map(|&(a, b)| mean(&z.d_ns, a, b)).collect(),
        s_mean: r.iter().map(|&(a, b)| mean_rows(&z.s[..inst.t()], a, b)).collect(),
    })
}

/// Aggregated objective evaluated from its definition.
pub fn aggregated_objective(
    inst: &GepInstance,
    partition: &ChronoPartition,
    sol: &AggSolution,
    kind: ModelKind,
    mode: StateMode,
) -> Result<f64> {
    let params = aggregate_params(inst, partition)?;
    let mut j: f64 = inst.c_inv.iter().zip(&sol.x).map(|(c, x)| c * x).sum();
    let use_states = inst.penalty_uses_states();
    for (k, &w) in params.weights.iter().enumerate() {
        let op_cost: f64 = sol.p[k].iter().zip(&inst.c_p).map(|(p, c)| p * c).sum();
        j += w * (inst.delta * op_cost + inst.c_ns * sol.d_ns[k]);
        if kind == ModelKind::Miqp {
            let use_mean = mode == StateMode::ClusterMean && use_states && w >= 2.0;
            let op = sol.op_vector(k, use_mean);
            for (row, r) in inst.penalty_matrix.iter().zip(&params.z_ref[k]) {
                let v: f64 = row.iter().zip(&op).map(|(a, z)| a * z).sum::<f64>() - r;
                j += w * v * v;
            }
        }
    }
    Ok(j)
}

/// Largest residual of the aggregated constraints, evaluated from their
/// definitions (mean-state links excluded).
pub fn aggregated_residual(inst: &GepInstance, partition: &ChronoPartition, sol: &AggSolution) -> Result<f64> {
    let params = aggregate_params(inst, partition)?;
    let (g, n) = (inst.g(), inst.n());
    let kk = partition.num_clusters();
    let d = inst.delta;
    let mut worst: f64 = 0.0;
    let mut up = |v: f64| worst = worst.max(v);
    for k in 0..kk {
        let w = params.weights[k];
        let supply = sol.p[k].iter().sum::<f64>() * d
            + (0..n).map(|m| sol.p_d[k][m] - sol.p_c[k][m]).sum::<f64>() * d
            + sol.d_ns[k];
        up((supply - params.demand[k]).abs());
        up(-sol.d_ns[k]);
        for m in 0..n {
            let next = sol.s[k][m] + w * d * (inst.eta_c[m] * sol.p_c[k][m] - inst.eta_d[m] * sol.p_d[k][m]);
            up((sol.s[k + 1][m] - next).abs());
            let (clo, chi) = inst.charge_limits(m);
            let (dlo, dhi) = inst.discharge_limits(m);
            up(clo - sol.p_c[k][m]);
            up(sol.p_c[k][m] - chi);
            up(dlo - sol.p_d[k][m]);
            up(sol.p_d[k][m] - dhi);
        }
        for j in 0..g {
            up(sol.p[k][j] - params.cap_factor[k][j] * sol.x[j]);
            up(-sol.p[k][j]);
        }
    }
    for m in 0..n {
        up((sol.s[0][m] - inst.s0[m]).abs());
        for k in 0..=kk {
            up(sol.s[k][m] - sol.x[g + m] * d);
            up(-sol.s[k][m]);
        }
    }
    for i in 0..g + n {
        up(sol.b[i] * inst.x_min[i] - sol.x[i]);
        up(sol.x[i] - sol.b[i] * inst.x_max[i]);
        up(-sol.x[i]);
        up(sol.b[i].min((1.0 - sol.b[i]).abs()).abs());
    }
    Ok(worst)
}
