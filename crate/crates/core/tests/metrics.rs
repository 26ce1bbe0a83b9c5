mod common;

use common::*;
use gep_tsa::bounds::{run_tsa_bounds, TsaOptions};
use gep_tsa::metrics::*;
use gep_tsa::model::{objective_terms, ModelKind};
use gep_tsa::par::Execution;
use gep_tsa::solve::SolverConfig;

#[test]
fn bounds_bracket_optimal_storage_capacity() {
    let inst = desk_instance(3, 3, 48, 10, 0.15);
    for kind in KINDS {
        let (_, z) = full_optimum(&inst, kind);
        let trace = run_tsa_bounds(&inst, &TsaOptions { kind, k0: 8, rho: 8, eps_thr: 0.01, ..Default::default() })
            .unwrap();
        for n in 0..inst.n() {
            let m = MetricSpec::storage_capacity(&inst, n);
            let tol = 1e-6 * inst.x_max[inst.g() + n].max(1.0);
            let b = metric_bounds(
                &inst,
                &m,
                trace.lb,
                trace.ub,
                kind,
                trace.solution.as_ref(),
                &SolverConfig::BuiltIn,
                Execution::Parallel,
            )
            .unwrap();
            assert!(b.m_lb - tol <= m.eval(&z) && m.eval(&z) <= b.m_ub + tol, "{b:?}");
            assert!(b.m_lb <= b.m_ub + 1e-9);
            assert!(b.lb_side_holds);
            for s in [&b.min_solution, &b.max_solution] {
                let j = objective_terms(&inst, s, kind).unwrap().total;
                assert!(j <= trace.ub + rel_tol(1e-6, trace.ub));
            }
            let relaxed = metric_bounds_relaxed(&inst, &m, trace.ub, kind, RelaxMode::LpRelaxMin, None).unwrap();
            assert!(relaxed.value <= b.m_lb + 1e-6);
            assert!(!relaxed.restriction);
            let fixed = metric_bounds_relaxed(&inst, &m, trace.ub, kind, RelaxMode::FixVarsMax, Some(&z)).unwrap();
            assert!(fixed.restriction);
            assert!(fixed.value >= m.eval(&z) - tol);
            assert!(fixed.value <= b.m_ub + tol);
        }
    }
}

#[test]
fn tighter_cap_narrows_the_interval() {
    let inst = desk_instance(2, 2, 24, 3, 0.15);
    let (j, _) = full_optimum(&inst, ModelKind::Milp);
    let m = MetricSpec::investment_cost(&inst);
    let run = |cap: f64| {
        metric_bounds(&inst, &m, j, cap, ModelKind::Milp, None, &SolverConfig::BuiltIn, Execution::Sequential).unwrap()
    };
    let wide = run(j * 1.05);
    let narrow = run(j * 1.01);
    assert!(narrow.m_ub <= wide.m_ub + 1e-9 * wide.m_ub.abs().max(1.0));
    assert!(narrow.m_lb >= wide.m_lb - 1e-9 * wide.m_lb.abs().max(1.0));
}

#[test]
fn per_period_bounds_sandwich_operating_cost() {
    let inst = desk_instance(2, 2, 48, 6, 0.2);
    let trace = run_tsa_bounds(&inst, &TsaOptions { k0: 6, rho: 6, ..Default::default() }).unwrap();
    let avg = average_cost_bounds(&trace, &inst, ModelKind::Milp).unwrap();
    let t = inst.t() as f64;
    assert!((avg.lb_per_period - trace.lb / t).abs() < 1e-12);
    assert!(avg.operational_per_period >= avg.lb_per_period - avg.investment_per_period - 1e-9);
    assert!(avg.operational_per_period <= avg.ub_per_period + 1e-9);
    assert!((0.0..=1.0).contains(&avg.investment_share));
}

#[test]
fn zero_demand_costs_nothing() {
    let mut inst = desk_instance(2, 1, 12, 0, 0.3);
    inst.demand = vec![0.0; 12];
    let trace = run_tsa_bounds(&inst, &TsaOptions { kind: ModelKind::Milp, k0: 2, rho: 2, ..Default::default() })
        .unwrap();
    let avg = average_cost_bounds(&trace, &inst, ModelKind::Milp).unwrap();
    assert!(avg.lb_per_period.abs() < 1e-6 && avg.ub_per_period.abs() < 1e-6, "{avg:?}");
}

#[test]
fn warm_start_above_cap_is_rejected() {
    let inst = desk_instance(1, 1, 6, 0, 0.3);
    let (j, z) = full_optimum(&inst, ModelKind::Milp);
    let m = MetricSpec::storage_capacity(&inst, 0);
    let r = metric_bounds(&inst, &m, j, j * 0.5, ModelKind::Milp, Some(&z), &SolverConfig::BuiltIn, Execution::Parallel);
    assert!(r.is_err());
    assert!(metric_bounds(&inst, &m, j, j * 0.5 - 1.0, ModelKind::Milp, None, &SolverConfig::BuiltIn, Execution::Parallel).is_err());
}
