//! Shared assembly of full-scale, aggregated, restricted and subproblem models.
//!
//! A full-scale model is the special case of an aggregated model whose periods
//! all carry weight 1, so one routine builds both.

use super::canonical::{CanonicalProblem, LinExpr, QuadCap, RowTag, SquareTerm};
use super::layout::ModelLayout;
use super::ModelKind;
use crate::instance::GepInstance;

/// Per-period inputs after (optional) aggregation.
#[derive(Debug, Clone)]
pub(crate) struct PeriodData {
    /// Number of original periods represented (`T_k`; 1 for full models).
    pub weights: Vec<f64>,
    pub demand: Vec<f64>,
    pub cap_factor: Vec<Vec<f64>>,
    pub z_ref: Vec<Vec<f64>>,
    /// Periods whose penalty uses a separate mean-state variable.
    pub mean_state: Vec<bool>,
}

impl PeriodData {
    pub fn full(inst: &GepInstance) -> Self {
        let t = inst.t();
        Self {
            weights: vec![1.0; t],
            demand: inst.demand.clone(),
            cap_factor: inst.cap_factor.clone(),
            z_ref: inst.z_ref.clone(),
            mean_state: vec![false; t],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }
}

/// How first-stage decisions enter the model.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Investment<'a> {
    /// `x`, `b` are variables; `b` is binary.
    Free,
    /// `x` is a variable, `b` is fixed to the given 0/1 values.
    FixedBinaries(&'a [f64]),
    /// `x` and `b` are absent; capacities enter the right-hand sides.
    FixedCapacity(&'a [f64]),
}

pub(crate) fn layout_for(inst: &GepInstance, data: &PeriodData, inv: Investment<'_>) -> ModelLayout {
    let mut layout = ModelLayout::new(
        inst.g(),
        inst.n(),
        data.len(),
        !matches!(inv, Investment::FixedCapacity(_)),
    );
    let mut slot = 0;
    for (k, &m) in data.mean_state.iter().enumerate() {
        if m {
            layout.mean_slot[k] = Some(slot);
            slot += 1;
        }
    }
    layout
}

/// Linear cost `C_invᵀx + Σ_k w_k (Δ C_pᵀ p_k + C_ns d_k)`; the investment
/// part is dropped when capacities are fixed.
pub(crate) fn linear_cost(inst: &GepInstance, data: &PeriodData, layout: &ModelLayout) -> LinExpr {
    let (g, n) = (inst.g(), inst.n());
    let mut e = LinExpr::with_capacity(layout.core_len());
    if layout.has_investment {
        for i in 0..g + n {
            e.push(layout.x(i), inst.c_inv[i]);
        }
    }
    for (k, &w) in data.weights.iter().enumerate() {
        for j in 0..g {
            e.push(layout.p(k, j), w * inst.delta * inst.c_p[j]);
        }
        e.push(layout.dns(k), w * inst.c_ns);
    }
    e
}

/// Weighted squares `w_k (A_r · z_op[k] − z_ref[k][r])²`.
pub(crate) fn penalty_squares(inst: &GepInstance, data: &PeriodData, layout: &ModelLayout) -> Vec<SquareTerm> {
    let mut out = Vec::with_capacity(data.len() * inst.num_ref);
    for k in 0..data.len() {
        for (r, row) in inst.penalty_matrix.iter().enumerate() {
            let mut expr = LinExpr::new();
            for (j, &a) in row.iter().enumerate() {
                expr.push(layout.op_component(k, j), a);
            }
            out.push(SquareTerm {
                expr,
                target: data.z_ref[k][r],
                weight: data.weights[k],
            });
        }
    }
    out
}

pub(crate) fn assemble(
    inst: &GepInstance,
    data: &PeriodData,
    kind: ModelKind,
    inv: Investment<'_>,
) -> CanonicalProblem {
    let (g, n) = (inst.g(), inst.n());
    let periods = data.len();
    let layout = layout_for(inst, data, inv);
    let mut prob = CanonicalProblem::new(layout.num_vars());
    let delta = inst.delta;

    // Bounds. Everything is non-negative.
    prob.lower.iter_mut().for_each(|l| *l = 0.0);
    if layout.has_investment {
        for i in 0..g + n {
            prob.upper[layout.x(i)] = inst.x_max[i];
            let b = layout.b(i);
            match inv {
                Investment::FixedBinaries(fixed) => {
                    prob.lower[b] = fixed[i];
                    prob.upper[b] = fixed[i];
                }
                _ => {
                    prob.upper[b] = 1.0;
                    prob.integer[b] = true;
                }
            }
        }
    }
    for k in 0..periods {
        for m in 0..n {
            let (clo, chi) = inst.charge_limits(m);
            let (dlo, dhi) = inst.discharge_limits(m);
            prob.lower[layout.pc(k, m)] = clo;
            prob.upper[layout.pc(k, m)] = chi;
            prob.lower[layout.pd(k, m)] = dlo;
            prob.upper[layout.pd(k, m)] = dhi;
        }
    }
    for m in 0..n {
        prob.lower[layout.s(0, m)] = inst.s0[m];
        prob.upper[layout.s(0, m)] = inst.s0[m];
    }

    // Objective.
    for (i, c) in linear_cost(inst, data, &layout).iter() {
        prob.linear[i] += c;
    }
    if kind == ModelKind::Miqp {
        prob.squares = penalty_squares(inst, data, &layout);
    }

    // Energy balance.
    for k in 0..periods {
        let mut e = LinExpr::with_capacity(g + 2 * n + 1);
        for j in 0..g {
            e.push(layout.p(k, j), delta);
        }
        for m in 0..n {
            e.push(layout.pd(k, m), delta);
            e.push(layout.pc(k, m), -delta);
        }
        e.push(layout.dns(k), 1.0);
        prob.add_eq(e, data.demand[k], RowTag::Balance { t: k });
    }

    // Storage dynamics, scaled by the period weight.
    for k in 0..periods {
        let scale = data.weights[k] * delta;
        for m in 0..n {
            let e = LinExpr::with_capacity(4)
                .term(layout.s(k + 1, m), 1.0)
                .term(layout.s(k, m), -1.0)
                .term(layout.pc(k, m), -scale * inst.eta_c[m])
                .term(layout.pd(k, m), scale * inst.eta_d[m]);
            prob.add_eq(e, 0.0, RowTag::Dynamics { t: k, n: m });
        }
    }

    // Storage energy capacity, terminal state included.
    let storage_cap = |prob: &mut CanonicalProblem, var: usize, m: usize, tag: RowTag| match inv {
        Investment::FixedCapacity(x) => {
            prob.add_le(LinExpr::new().term(var, 1.0), x[g + m] * delta, tag)
        }
        _ => prob.add_le(
            LinExpr::new().term(var, 1.0).term(layout.x(g + m), -delta),
            0.0,
            tag,
        ),
    };
    for k in 0..=periods {
        for m in 0..n {
            storage_cap(&mut prob, layout.s(k, m), m, RowTag::StorageCap { t: k, n: m });
        }
    }

    // Generation limits.
    for k in 0..periods {
        for j in 0..g {
            let f = data.cap_factor[k][j];
            let tag = RowTag::GenCap { t: k, g: j };
            match inv {
                Investment::FixedCapacity(x) => {
                    prob.add_le(LinExpr::new().term(layout.p(k, j), 1.0), f * x[j], tag)
                }
                _ => prob.add_le(
                    LinExpr::new().term(layout.p(k, j), 1.0).term(layout.x(j), -f),
                    0.0,
                    tag,
                ),
            }
        }
    }

    // Investment limits b·X_min ≤ x ≤ b·X_max.
    if layout.has_investment {
        for i in 0..g + n {
            prob.add_le(
                LinExpr::new().term(layout.b(i), inst.x_min[i]).term(layout.x(i), -1.0),
                0.0,
                RowTag::InvLower { i },
            );
            prob.add_le(
                LinExpr::new().term(layout.x(i), 1.0).term(layout.b(i), -inst.x_max[i]),
                0.0,
                RowTag::InvUpper { i },
            );
        }
    }

    // Mean states: every bound below is implied by the per-period model, so the
    // aggregated model stays a relaxation.
    for k in 0..periods {
        if layout.mean_slot[k].is_none() {
            continue;
        }
        let w = data.weights[k];
        for m in 0..n {
            let sm = layout.mean_state(k, m).expect("mean slot");
            let (lo, hi) = inst.net_charge_range(m);
            let head = 0.5 * (w - 1.0) * delta;
            let tail = 0.5 * (w + 1.0) * delta;
            let s_start = layout.s(k, m);
            let s_end = layout.s(k + 1, m);
            let tag = |which| RowTag::MeanState { k, n: m, which };
            prob.add_le(LinExpr::new().term(sm, 1.0).term(s_start, -1.0), head * hi, tag(0));
            prob.add_le(LinExpr::new().term(s_start, 1.0).term(sm, -1.0), -head * lo, tag(1));
            prob.add_le(LinExpr::new().term(s_end, 1.0).term(sm, -1.0), tail * hi, tag(2));
            prob.add_le(LinExpr::new().term(sm, 1.0).term(s_end, -1.0), -tail * lo, tag(3));
            storage_cap(&mut prob, sm, m, tag(4));
        }
    }

    prob.layout = Some(layout);
    prob
}

/// Cost cap `J(z) ≤ j_ub` for the given model kind, divided through by
/// `max(1, |j_ub|)` so its coefficients are of order one.
pub(crate) fn add_cost_cap(
    prob: &mut CanonicalProblem,
    inst: &GepInstance,
    data: &PeriodData,
    kind: ModelKind,
    j_ub: f64,
) {
    let layout = prob.layout.clone().expect("model layout");
    let scale = 1.0 / j_ub.abs().max(1.0);
    let mut lin = LinExpr::new();
    for (i, c) in linear_cost(inst, data, &layout).iter() {
        lin.push(i, c * scale);
    }
    match kind {
        ModelKind::Milp => prob.add_le(lin, j_ub * scale, RowTag::CostCap),
        ModelKind::Miqp => {
            let mut squares = penalty_squares(inst, data, &layout);
            squares.iter_mut().for_each(|s| s.weight *= scale);
            prob.quad_cap = Some(QuadCap {
                linear: lin,
                squares,
                constant: 0.0,
                rhs: j_ub * scale,
            })
        }
    }
}
