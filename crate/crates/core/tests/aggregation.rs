mod common;

use common::*;
use gep_tsa::aggregation::*;
use gep_tsa::clustering::{ChronoPartition, FeatureMatrix, Technique};
use gep_tsa::model::{objective_terms, ModelKind};
use gep_tsa::par::Execution;
use gep_tsa::solve::{solve_mip, BnbOptions};

#[test]
fn cluster_means_by_hand() {
    let mut inst = desk_instance(1, 1, 4, 0, 0.3);
    inst.demand = vec![1.0, 2.0, 3.0, 4.0];
    let p = aggregate_params(&inst, &ChronoPartition::from_breakpoints(4, &[2]).unwrap()).unwrap();
    assert_eq!(p.demand, vec![1.5, 3.5]);
    assert_eq!(p.weights, vec![2.0, 2.0]);
    assert!(aggregate_params(&inst, &ChronoPartition::singletons(5)).is_err());
}

#[test]
fn feasible_points_map_to_feasible_aggregated_points() {
    let mut rng = rng(99);
    for _ in 0..8 {
        let inst = random_instance(&mut rng, (1, 3), (1, 3), (6, 24));
        for kind in KINDS {
            let z = sample_feasible(&inst, &mut rng, kind);
            let j = objective_terms(&inst, &z, kind).unwrap().total;
            for _ in 0..3 {
                let part = random_partition(&mut rng, inst.t());
                let agg = aggregate_solution(&inst, &part, &z).unwrap();
                assert!(aggregated_residual(&inst, &part, &agg).unwrap() <= 1e-9);

                let prob = build_aggregated(&inst, &part, kind).unwrap();
                let v = prob.violation(&agg.encode(prob.layout.as_ref().unwrap()));
                assert!(v.max() <= 1e-9, "{v:?}");

                let jhat = aggregated_objective(&inst, &part, &agg, kind, StateMode::ClusterMean).unwrap();
                let direct = prob.objective(&agg.encode(prob.layout.as_ref().unwrap()));
                assert!((jhat - direct).abs() <= rel_tol(1e-9, jhat));
                match kind {
                    ModelKind::Milp => assert!((jhat - j).abs() <= rel_tol(1e-9, j)),
                    ModelKind::Miqp => assert!(jhat <= j + rel_tol(1e-9, j), "{jhat} > {j}"),
                }
            }
        }
    }
}

#[test]
fn singleton_partition_is_the_full_model() {
    let inst = desk_instance(2, 2, 12, 3, 0.15);
    let single = ChronoPartition::singletons(12);
    for kind in KINDS {
        let (j, z) = full_optimum(&inst, kind);
        let agg = aggregate_solution(&inst, &single, &z).unwrap();
        assert_eq!((agg.p.clone(), agg.s.clone(), agg.d_ns.clone()), (z.p.clone(), z.s.clone(), z.d_ns.clone()));
        let prob = build_aggregated(&inst, &single, kind).unwrap();
        let r = solve_mip(&prob, &BnbOptions::default()).unwrap();
        assert!((r.objective - j).abs() <= rel_tol(1e-6, j), "{} vs {j}", r.objective);
    }
}

#[test]
fn aggregated_optimum_bounds_full_optimum() {
    let mut rng = rng(5);
    for _ in 0..4 {
        let inst = random_instance(&mut rng, (1, 3), (1, 3), (8, 24));
        let features = FeatureMatrix::from_instance(&inst, true);
        for kind in KINDS {
            let (j, _) = full_optimum(&inst, kind);
            for tech in [Technique::Sequential, Technique::Uniform, Technique::KMeans, Technique::Gmm, Technique::Dp] {
                for k in [1, 3, inst.t() / 2] {
                    let part = tech.partition(&features, k, 17, Execution::Parallel).unwrap();
                    let prob = build_aggregated(&inst, &part, kind).unwrap();
                    let n = 2 * inst.num_assets() + k * inst.g() + (k + 1) * inst.n() + 2 * k * inst.n() + k;
                    assert!(prob.num_vars >= n);
                    if kind == ModelKind::Milp {
                        assert_eq!(prob.num_vars, n);
                    }
                    let r = solve_mip(&prob, &BnbOptions::default()).unwrap();
                    assert!(r.objective <= j + rel_tol(1e-6, j), "{tech} K={k}: {} > {j}", r.objective);
                }
            }
        }
    }
}

#[test]
fn constant_solution_averages_to_itself() {
    let inst = desk_instance(2, 1, 8, 2, 0.3);
    let mut z = gep_tsa::model::FullSolution::zeros(&inst);
    z.p.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v = 0.25));
    z.d_ns.iter_mut().for_each(|v| *v = 0.5);
    let part = ChronoPartition::from_sizes(&[3, 5]).unwrap();
    let agg = aggregate_solution(&inst, &part, &z).unwrap();
    assert!(agg.p.iter().flatten().all(|&v| (v - 0.25).abs() < 1e-15));
    assert!(agg.d_ns.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    assert_eq!(agg.s.len(), 3);
}
