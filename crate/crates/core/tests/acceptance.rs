//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion and
//! exits non-zero if any fails.
//!
//! Set `GEP_TSA_SCALING_REPORT=1` to include the large report-only scaling run.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use gep_tsa::aggregation::{aggregate_solution, aggregated_objective, build_aggregated, StateMode};
use gep_tsa::benders::{run_benders, subproblem_cut, BendersOptions};
use gep_tsa::bounds::{run_tsa_bounds, write_overlay, Termination, TsaOptions};
use gep_tsa::clustering::{dp_segmentation, ChronoPartition, FeatureMatrix};
use gep_tsa::instance::{generate_instance, GenConfig, GepInstance};
use gep_tsa::metrics::{metric_bounds, metric_bounds_relaxed, MetricSpec, RelaxMode};
use gep_tsa::model::{build_full, objective_terms, ModelKind};
use gep_tsa::par::{self, Execution};
use gep_tsa::solve::{enumerate_binaries, solve_mip, BnbOptions, SolverConfig};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Criterion 1: aggregated optimum never exceeds the full optimum.
fn lower_bound_property() -> Outcome {
    let jobs: Vec<u64> = (0..200).collect();
    let worst = par::map(Execution::Parallel, &jobs, |&i| -> Result<f64, String> {
        let mut rng = rng(1_000 + i);
        let inst = random_instance(&mut rng, (1, 5), (1, 5), (6, 48));
        let parts: Vec<ChronoPartition> = (0..3).map(|_| random_partition(&mut rng, inst.t())).collect();
        let mut worst = f64::NEG_INFINITY;
        for kind in KINDS {
            let (j, _) = full_optimum(&inst, kind);
            for part in &parts {
                let r = solve_mip(&build_aggregated(&inst, part, kind).unwrap(), &BnbOptions::default()).unwrap();
                let excess = (r.objective - j) / j.abs().max(1.0);
                check(excess <= 1e-6, || format!("instance {i} {kind:?} K={}: excess {excess:e}", part.num_clusters()))?;
                worst = worst.max(excess);
            }
        }
        Ok(worst)
    });
    let mut w = f64::NEG_INFINITY;
    for r in worst {
        w = w.max(r?);
    }
    Ok(format!("1200 aggregated solves, worst relative excess {w:.2e}"))
}

/// Criterion 2: aggregate_solution maps feasible points to feasible points.
fn feasibility_mapping() -> Outcome {
    let mut rng = rng(2);
    let (mut res, mut ident, mut jensen) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for i in 0..100 {
        let inst = random_instance(&mut rng, (1, 5), (1, 5), (6, 48));
        let kind = KINDS[i % 2];
        let z = sample_feasible(&inst, &mut rng, kind);
        let part = random_partition(&mut rng, inst.t());
        let agg = aggregate_solution(&inst, &part, &z).unwrap();
        for k in KINDS {
            let prob = build_aggregated(&inst, &part, k).unwrap();
            let v = prob.violation(&agg.encode(prob.layout.as_ref().unwrap())).max();
            res = res.max(v);
            check(v <= 1e-6, || format!("sample {i} {k:?}: residual {v:e}"))?;
        }
        let j = objective_terms(&inst, &z, ModelKind::Milp).unwrap().total;
        let jh = aggregated_objective(&inst, &part, &agg, ModelKind::Milp, StateMode::ClusterMean).unwrap();
        let d = (jh - j).abs() / j.abs().max(1.0);
        ident = ident.max(d);
        check(d <= 1e-8, || format!("sample {i}: MILP identity off by {d:e}"))?;
        let jq = objective_terms(&inst, &z, ModelKind::Miqp).unwrap().total;
        let jqh = aggregated_objective(&inst, &part, &agg, ModelKind::Miqp, StateMode::ClusterMean).unwrap();
        let e = (jqh - jq) / jq.abs().max(1.0);
        jensen = jensen.max(e);
        check(e <= 1e-8, || format!("sample {i}: MIQP aggregated objective above full by {e:e}"))?;
    }
    Ok(format!("max residual {res:.1e}, MILP identity {ident:.1e}, MIQP excess {jensen:.1e}"))
}

/// Criterion 3: branch and bound agrees with enumeration.
fn mip_exactness() -> Outcome {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let mut inst;
        loop {
            inst = random_instance(&mut rng, (1, 7), (1, 7), (2, 24));
            if inst.num_assets() <= 8 {
                break;
            }
        }
        for kind in KINDS {
            let p = build_full(&inst, kind).unwrap();
            let a = solve_mip(&p, &BnbOptions::default()).unwrap();
            let b = enumerate_binaries(&p, Execution::Parallel).unwrap();
            let d = (a.objective - b.objective).abs() / b.objective.abs().max(1.0);
            worst = worst.max(d);
            check(d <= 1e-6, || format!("instance {i} {kind:?}: {} vs {}", a.objective, b.objective))?;
        }
    }
    Ok(format!("100 solves, worst relative difference {worst:.1e}"))
}

fn desk(seed: u64) -> GepInstance {
    let mut rng = rng(seed);
    let mut cfg = GenConfig::new(rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(12..=36), seed);
    cfg.demand_scale = rng.gen_range(0.1..0.4);
    generate_instance(&cfg).unwrap()
}

/// Criterion 4: singleton partitions reproduce the full optimum.
fn singleton_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for s in 0..20 {
        let inst = desk(400 + s);
        let kind = KINDS[s as usize % 2];
        let (j, _) = full_optimum(&inst, kind);
        let agg = solve_mip(
            &build_aggregated(&inst, &ChronoPartition::singletons(inst.t()), kind).unwrap(),
            &BnbOptions::default(),
        )
        .unwrap();
        let d = (agg.objective - j).abs() / j.abs().max(1.0);
        worst = worst.max(d);
        check(d <= 1e-6, || format!("instance {s}: {} vs {j}", agg.objective))?;
        let opts = TsaOptions { kind, k0: inst.t(), eps_thr: 1e-9, ..Default::default() };
        let trace = run_tsa_bounds(&inst, &opts).unwrap();
        check(trace.records.len() == 1 && trace.records[0].gap <= 1e-6, || {
            format!("instance {s}: first-iteration gap {}", trace.records[0].gap)
        })?;
    }
    Ok(format!("20 instances, worst relative difference {worst:.1e}"))
}

/// Criterion 5: Algorithm 1 on the stylized G = N = 10, T = 500 example.
fn stylized_example() -> Outcome {
    let inst = generate_instance(&GenConfig::new(10, 10, 500, 0)).unwrap();
    let mut notes = Vec::new();
    for kind in KINDS {
        let start = Instant::now();
        let opts = TsaOptions { kind, k0: 10, rho: 10, eps_thr: 0.01, seed: 0, ..Default::default() };
        let trace = run_tsa_bounds(&inst, &opts).map_err(|e| e.to_string())?;
        let last = trace.records.last().unwrap();
        check(trace.termination == Termination::Threshold && last.gap <= 0.01, || {
            format!("{kind:?}: ended with gap {} ({:?})", last.gap, trace.termination)
        })?;
        check(last.k <= 250, || format!("{kind:?}: K_final = {}", last.k))?;
        for w in trace.records.windows(2) {
            check(w[1].lb >= w[0].lb && w[1].ub <= w[0].ub, || format!("{kind:?}: bounds not monotone"))?;
        }
        for r in &trace.records {
            check(r.residual <= 1e-6, || format!("{kind:?}: iterate {} residual {:e}", r.iter, r.residual))?;
        }
        notes.push(format!(
            "{kind:?} gap {:.4} at K={} in {:.1}s",
            last.gap,
            last.k,
            start.elapsed().as_secs_f64()
        ));
    }
    Ok(notes.join(", "))
}

/// Criterion 6: Benders reaches the branch-and-bound optimum.
fn benders_baseline() -> Outcome {
    let inst = generate_instance(&GenConfig::new(5, 5, 100, 0)).unwrap();
    let mut rng = rng(6);
    let mut notes = Vec::new();
    for kind in KINDS {
        let (j, _) = full_optimum(&inst, kind);
        let bend = run_benders(&inst, &BendersOptions { kind, eps_thr: 1e-7, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let d = (bend.ub - j).abs() / j.abs().max(1.0);
        check(d <= 1e-6, || format!("{kind:?}: Benders {} vs B&B {j}", bend.ub))?;
        for w in bend.records.windows(2) {
            check(w[1].lb >= w[0].lb, || format!("{kind:?}: lower bound decreased"))?;
        }
        let points: Vec<(Vec<f64>, Vec<f64>)> = (0..20)
            .map(|_| {
                let b = random_binaries(&mut rng, inst.num_assets());
                let x = (0..inst.num_assets()).map(|i| b[i] * rng.gen_range(inst.x_min[i]..=inst.x_max[i])).collect();
                (x, b)
            })
            .collect();
        let evals: Vec<_> = points.iter().map(|(x, b)| subproblem_cut(&inst, x, b, kind).unwrap()).collect();
        for ((x, b), (v, _)) in points.iter().zip(&evals) {
            for (_, cut) in &evals {
                let c = cut.eval(x, b);
                check(c <= v + 1e-9 * v.abs().max(1.0), || format!("{kind:?}: cut value {c} above {v}"))?;
            }
        }
        let tsa = run_tsa_bounds(&inst, &TsaOptions { kind, ..Default::default() }).map_err(|e| e.to_string())?;
        let dir = std::env::temp_dir();
        let path = dir.join(format!("gep_tsa_overlay_{kind:?}.csv").to_lowercase());
        let mut file = std::fs::File::create(&path).map_err(|e| e.to_string())?;
        write_overlay(&mut file, &[("tsa", &tsa), ("benders", &bend)], false).map_err(|e| e.to_string())?;
        notes.push(format!(
            "{kind:?}: Benders {} iterations, TSA {} iterations (overlay {})",
            bend.records.len(),
            tsa.records.len(),
            path.display()
        ));
    }
    Ok(notes.join("; "))
}

/// Criterion 7: metric intervals bracket the optimal storage capacity.
fn metric_bracketing() -> Outcome {
    let mut checked = 0;
    for s in 0..20 {
        let inst = desk(700 + s);
        let kind = KINDS[s as usize % 2];
        let (_, z) = full_optimum(&inst, kind);
        let opts = TsaOptions { kind, k0: 4, rho: 4, eps_thr: 0.01, ..Default::default() };
        let trace = run_tsa_bounds(&inst, &opts).unwrap();
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
            .map_err(|e| e.to_string())?;
            let v = m.eval(&z);
            check(b.m_lb - tol <= v && v <= b.m_ub + tol, || {
                format!("instance {s} unit {n}: {v} outside [{}, {}]", b.m_lb, b.m_ub)
            })?;
            let lp = metric_bounds_relaxed(&inst, &m, trace.ub, kind, RelaxMode::LpRelaxMin, None)
                .map_err(|e| e.to_string())?;
            check(lp.value <= b.m_lb + tol, || format!("instance {s} unit {n}: relaxed {} > {}", lp.value, b.m_lb))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} metric intervals on 20 instances"))
}

/// Criterion 8: DP segmentation is optimal against exhaustive search.
fn dp_optimality() -> Outcome {
    fn partitions(t: usize, k: usize) -> Vec<ChronoPartition> {
        fn rec(start: usize, t: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<ChronoPartition>) {
            if left == 0 {
                out.push(ChronoPartition::from_breakpoints(t, cur).unwrap());
                return;
            }
            for b in (start + 1)..=(t - left) {
                cur.push(b);
                rec(b, t, left - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, t, k - 1, &mut Vec::new(), &mut out);
        out
    }
    let mut rng = rng(8);
    let mut cases = 0;
    for m in 0..50 {
        let dim = rng.gen_range(1..=3);
        let rows: Vec<Vec<f64>> = (0..12).map(|_| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        for t in 1..=12 {
            let f = FeatureMatrix::new(rows[..t].to_vec()).unwrap();
            for k in 1..=t.min(4) {
                let dp = f.sse(&dp_segmentation(&f, k, Execution::Parallel).unwrap());
                let best = partitions(t, k).iter().map(|p| f.sse(p)).fold(f64::INFINITY, f64::min);
                check((dp - best).abs() <= 1e-9 * best.max(1.0), || format!("matrix {m} T={t} K={k}: {dp} vs {best}"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (matrix, T, K) cases"))
}

/// Criterion 9: large-instance runtimes are report-only.
fn scaling_report() -> Outcome {
    if std::env::var("GEP_TSA_SCALING_REPORT").map_or(true, |v| v != "1") {
        return Ok("report-only; large-instance runtimes not reproduced here, covered by criteria 1-8 \
                   (set GEP_TSA_SCALING_REPORT=1 for the G=N=50, T=2000 MIQP timing run)"
            .into());
    }
    let inst = generate_instance(&GenConfig::new(50, 50, 2000, 0)).unwrap();
    let kind = ModelKind::Miqp;
    let t0 = Instant::now();
    let tsa = run_tsa_bounds(&inst, &TsaOptions { kind, ..Default::default() });
    let t_tsa = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let bend = run_benders(&inst, &BendersOptions { kind, max_iter: 50, ..Default::default() });
    let t_bend = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let full = solve_mip(
        &build_full(&inst, kind).unwrap(),
        &BnbOptions { node_limit: 200, ..Default::default() },
    );
    let t_full = t0.elapsed().as_secs_f64();
    Ok(format!(
        "report-only: tsa-bounds {t_tsa:.1}s (gap {:?}), benders {t_bend:.1}s (gap {:?}), solve-full {t_full:.1}s ({:?})",
        tsa.ok().and_then(|t| t.final_gap()),
        bend.ok().and_then(|t| t.final_gap()),
        full.map(|r| r.status)
    ))
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, lower_bound_property),
        (2, feasibility_mapping),
        (3, mip_exactness),
        (4, singleton_equivalence),
        (5, stylized_example),
        (6, benders_baseline),
        (7, metric_bracketing),
        (8, dp_optimality),
        (9, scaling_report),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (n, f) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
                let msg = p.downcast_ref::<String>().cloned();
            Err(msg.or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {n}: PASS ({secs:.1}s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL ({secs:.1}s) {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
