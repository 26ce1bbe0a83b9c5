#![allow(dead_code)]

use gep_tsa::clustering::{sequential_partition, ChronoPartition};
use gep_tsa::instance::{generate_instance, GenConfig, GepInstance};
use gep_tsa::model::{build_full, build_restricted, decode_solution, FullSolution, ModelKind};
use gep_tsa::solve::{solve_convex, solve_mip, BnbOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KINDS: [ModelKind; 2] = [ModelKind::Milp, ModelKind::Miqp];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator config with a demand level drawn so that investments range from
/// partial to saturated.
pub fn random_config(rng: &mut ChaCha8Rng, g: (usize, usize), n: (usize, usize), t: (usize, usize)) -> GenConfig {
    let mut cfg = GenConfig::new(
        rng.gen_range(g.0..=g.1),
        rng.gen_range(n.0..=n.1),
        rng.gen_range(t.0..=t.1),
        rng.gen(),
    );
    cfg.demand_scale = rng.gen_range(0.05..0.5);
    cfg
}

pub fn random_instance(rng: &mut ChaCha8Rng, g: (usize, usize), n: (usize, usize), t: (usize, usize)) -> GepInstance {
    generate_instance(&random_config(rng, g, n, t)).unwrap()
}

/// Desk instance with a moderate demand level.
pub fn desk_instance(g: usize, n: usize, t: usize, seed: u64, demand_scale: f64) -> GepInstance {
    let mut cfg = GenConfig::new(g, n, t, seed);
    cfg.demand_scale = demand_scale;
    generate_instance(&cfg).unwrap()
}

pub fn full_optimum(inst: &GepInstance, kind: ModelKind) -> (f64, FullSolution) {
    let p = build_full(inst, kind).unwrap();
    let r = solve_mip(&p, &BnbOptions::default()).unwrap();
    assert!(r.is_optimal(), "{:?}", r.status);
    (r.objective, decode_solution(&p, &r.primal).unwrap())
}

pub fn random_binaries(rng: &mut ChaCha8Rng, na: usize) -> Vec<f64> {
    (0..na).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect()
}

/// Feasible full-scale solution: the restricted optimum at a random `b`.
pub fn sample_feasible(inst: &GepInstance, rng: &mut ChaCha8Rng, kind: ModelKind) -> FullSolution {
    let b = random_binaries(rng, inst.num_assets());
    let p = build_restricted(inst, &b, kind).unwrap();
    let r = solve_convex(&p).unwrap();
    assert!(r.is_optimal());
    decode_solution(&p, &r.primal).unwrap()
}

pub fn random_partition(rng: &mut ChaCha8Rng, t: usize) -> ChronoPartition {
    let k = rng.gen_range(1..=t);
    sequential_partition(t, k, rng.gen()).unwrap()
}

pub fn rel_tol(tol: f64, v: f64) -> f64 {
    tol * v.abs().max(1.0)
}
