mod common;

use common::*;
use gep_tsa::aggregation::build_aggregated;
use gep_tsa::model::{build_full, build_restricted};
use gep_tsa::par::Execution;
use gep_tsa::solve::*;

#[test]
fn mip_matches_enumeration_on_generated_models() {
    let mut rng = rng(3);
    for _ in 0..10 {
        let inst = random_instance(&mut rng, (1, 3), (1, 3), (4, 16));
        for kind in KINDS {
            let p = build_full(&inst, kind).unwrap();
            let bnb = solve_mip(&p, &BnbOptions::default()).unwrap();
            let brute = enumerate_binaries(&p, Execution::Parallel).unwrap();
            assert!((bnb.objective - brute.objective).abs() <= rel_tol(1e-6, brute.objective));
            assert!(bnb.bound <= brute.objective + rel_tol(1e-6, brute.objective));
            let root = solve_convex(&p.relaxed()).unwrap();
            assert!(root.objective <= bnb.objective + rel_tol(1e-9, bnb.objective));
        }
    }
}

#[test]
fn every_search_configuration_agrees() {
    let inst = desk_instance(3, 2, 16, 9, 0.15);
    for kind in KINDS {
        let p = build_full(&inst, kind).unwrap();
        let reference = solve_mip(&p, &BnbOptions::default()).unwrap();
        for branching in [Branching::MostFractional, Branching::LowestIndex] {
            for search in [Search::BestFirst, Search::DepthFirst] {
                for execution in [Execution::Sequential, Execution::Parallel] {
                    let opts = BnbOptions { branching, search, execution, batch_size: 3, ..Default::default() };
                    let r = solve_mip(&p, &opts).unwrap();
                    assert!((r.objective - reference.objective).abs() <= rel_tol(1e-7, reference.objective));
                }
            }
        }
    }
}

#[test]
fn histories_are_monotone() {
    let inst = desk_instance(4, 3, 12, 1, 0.15);
    let p = build_full(&inst, gep_tsa::model::ModelKind::Miqp).unwrap();
    let r = solve_mip(&p, &BnbOptions { batch_size: 2, ..Default::default() }).unwrap();
    for w in r.bound_history.windows(2) {
        assert!(w[1] >= w[0] - rel_tol(1e-9, w[0]), "{w:?}");
    }
    for w in r.incumbent_history.windows(2) {
        assert!(w[1] <= w[0], "{w:?}");
    }
    assert!(r.mip_gap.unwrap() <= 1e-8);
}

#[test]
fn weak_duality_on_convex_solves() {
    let mut rng = rng(14);
    for _ in 0..8 {
        let inst = random_instance(&mut rng, (1, 4), (1, 4), (4, 30));
        for kind in KINDS {
            let b = random_binaries(&mut rng, inst.num_assets());
            let part = random_partition(&mut rng, inst.t());
            for p in [
                build_restricted(&inst, &b, kind).unwrap(),
                build_full(&inst, kind).unwrap().relaxed(),
                build_aggregated(&inst, &part, kind).unwrap().relaxed(),
            ] {
                let r = solve_convex(&p).unwrap();
                assert!(r.is_optimal());
                let d = r.dual_objective.unwrap();
                assert!(d <= r.objective + rel_tol(1e-6, r.objective), "{d} > {}", r.objective);
                assert!(p.violation(&r.primal).max() <= 1e-6);
            }
        }
    }
}

#[test]
fn enumeration_refuses_large_problems() {
    let inst = desk_instance(11, 10, 2, 0, 0.3);
    let p = build_full(&inst, gep_tsa::model::ModelKind::Milp).unwrap();
    assert!(matches!(enumerate_binaries(&p, Execution::Sequential), Err(gep_tsa::GepError::TooManyBinaries(21))));
}
