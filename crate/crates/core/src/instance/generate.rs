use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GepInstance;
use crate::error::{GepError, Result};

// Independent RNG streams, one per stochastic component.
const STREAM_DEMAND: u64 = 1;
const STREAM_CAP_FACTOR: u64 = 2;
const STREAM_STORAGE: u64 = 3;
const STREAM_REFERENCE: u64 = 4;
const STREAM_PHASE: u64 = 5;

/// Parameters of the synthetic instance generator.
///
/// Cost and technical defaults follow the reference experiments; the demand and
/// capacity-factor profiles are seeded diurnal sinusoids with uniform noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_generators: usize,
    pub num_storage: usize,
    pub num_periods: usize,
    pub seed: u64,
    pub fraction_thermal: f64,
    pub delta: f64,
    pub c_ns: f64,
    pub c_inv_thermal: f64,
    pub c_inv_vres: f64,
    pub c_inv_storage: f64,
    pub c_p_thermal: f64,
    pub c_p_vres: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Storage power upper limits are drawn from `U(lo, hi)`.
    pub storage_power: (f64, f64),
    pub eta_c: f64,
    pub eta_d: f64,
    pub s0: f64,
    /// Storage-state references are drawn from `U(lo, hi)`.
    pub reference_range: (f64, f64),
    /// Penalize storage-state deviations (R = N). Without it R = 0.
    pub storage_penalty: bool,
    /// Demand base per installed-unit count: `D ≈ demand_scale · (G + N)`.
    pub demand_scale: f64,
    pub demand_amplitude: f64,
    pub demand_noise: f64,
    pub cf_mean: f64,
    pub cf_amplitude: f64,
    pub cf_noise: f64,
    /// vRES phase offsets are drawn from `U(0, cf_phase_spread)` hours.
    pub cf_phase_spread: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            num_generators: 10,
            num_storage: 10,
            num_periods: 500,
            seed: 0,
            fraction_thermal: 0.2,
            delta: 1.0,
            c_ns: 5000.0,
            c_inv_thermal: 40000.0,
            c_inv_vres: 30000.0,
            c_inv_storage: 35000.0,
            c_p_thermal: 50.0,
            c_p_vres: 3.0,
            x_min: 0.1,
            x_max: 1.0,
            storage_power: (0.3, 0.6),
            eta_c: 0.9,
            eta_d: 1.1,
            s0: 0.0,
            reference_range: (0.1, 1.0),
            storage_penalty: true,
            demand_scale: 0.5,
            demand_amplitude: 0.3,
            demand_noise: 0.05,
            cf_mean: 0.5,
            cf_amplitude: 0.5,
            cf_noise: 0.1,
            cf_phase_spread: 24.0,
        }
    }
}

impl GenConfig {
    pub fn new(g: usize, n: usize, t: usize, seed: u64) -> Self {
        Self {
            num_generators: g,
            num_storage: n,
            num_periods: t,
            seed,
            ..Self::default()
        }
    }

    /// Number of thermal units: `⌈fraction_thermal · G⌉`, listed first.
    pub fn num_thermal(&self) -> usize {
        ((self.fraction_thermal * self.num_generators as f64).ceil() as usize).min(self.num_generators)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(GepError::InvalidArgument(format!("GenConfig: {what}")));
        if self.num_periods == 0 {
            return bad("num_periods must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.fraction_thermal) {
            return bad("fraction_thermal must lie in [0, 1]");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta must be positive");
        }
        if !(0.0 <= self.x_min && self.x_min <= self.x_max) {
            return bad("need 0 <= x_min <= x_max");
        }
        if !(0.0 <= self.storage_power.0 && self.storage_power.0 <= self.storage_power.1) {
            return bad("storage_power range must be ordered and non-negative");
        }
        if !(self.reference_range.0 <= self.reference_range.1) {
            return bad("reference_range must be ordered");
        }
        let nonneg = [
            self.c_ns,
            self.c_inv_thermal,
            self.c_inv_vres,
            self.c_inv_storage,
            self.c_p_thermal,
            self.c_p_vres,
            self.eta_c,
            self.eta_d,
            self.s0,
            self.demand_scale,
            self.demand_noise,
            self.cf_noise,
            self.cf_phase_spread,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("costs, efficiencies, scales and noise levels must be finite and non-negative");
        }
        Ok(())
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Build a synthetic instance. Deterministic in `config.seed`.
pub fn generate_instance(config: &GenConfig) -> Result<GepInstance> {
    config.validate()?;
    let (g, n, t) = (config.num_generators, config.num_storage, config.num_periods);
    let thermal = config.num_thermal();

    let mut c_inv = Vec::with_capacity(g + n);
    c_inv.extend((0..g).map(|i| if i < thermal { config.c_inv_thermal } else { config.c_inv_vres }));
    c_inv.extend(std::iter::repeat(config.c_inv_storage).take(n));
    let c_p = (0..g)
        .map(|i| if i < thermal { config.c_p_thermal } else { config.c_p_vres })
        .collect();

    let mut rng = stream(config.seed, STREAM_DEMAND);
    let base = config.demand_scale * (g + n) as f64;
    let demand = (0..t)
        .map(|h| {
            let wave = 1.0 + config.demand_amplitude * (2.0 * PI * h as f64 / 24.0).sin();
            let noise = uniform(&mut rng, -config.demand_noise, config.demand_noise);
            (base * (wave + noise)).max(0.0)
        })
        .collect();

    let mut rng = stream(config.seed, STREAM_PHASE);
    let phases: Vec<f64> = (0..g).map(|_| uniform(&mut rng, 0.0, config.cf_phase_spread)).collect();
    let mut rng = stream(config.seed, STREAM_CAP_FACTOR);
    let cap_factor = (0..t)
        .map(|h| {
            (0..g)
                .map(|i| {
                    if i < thermal {
                        1.0
                    } else {
                        let angle = 2.0 * PI * (h as f64 + phases[i]) / 24.0;
                        let noise = uniform(&mut rng, -config.cf_noise, config.cf_noise);
                        (config.cf_mean + config.cf_amplitude * angle.sin() + noise).clamp(0.0, 1.0)
                    }
                })
                .collect()
        })
        .collect();

    let mut rng = stream(config.seed, STREAM_STORAGE);
    let (lo, hi) = config.storage_power;
    let p_s_max = (0..2 * n).map(|_| uniform(&mut rng, lo, hi)).collect();

    let num_ref = if config.storage_penalty { n } else { 0 };
    let op_dim = g + 3 * n + 1;
    let penalty_matrix = (0..num_ref)
        .map(|r| {
            let mut row = vec![0.0; op_dim];
            row[g + 1 + r] = 1.0;
            row
        })
        .collect();
    let mut rng = stream(config.seed, STREAM_REFERENCE);
    let (rlo, rhi) = config.reference_range;
    let z_ref = (0..t)
        .map(|_| (0..num_ref).map(|_| uniform(&mut rng, rlo, rhi)).collect())
        .collect();

    let inst = GepInstance {
        num_generators: g,
        num_storage: n,
        num_periods: t,
        delta: config.delta,
        c_inv,
        c_p,
        c_ns: config.c_ns,
        demand,
        cap_factor,
        eta_c: vec![config.eta_c; n],
        eta_d: vec![config.eta_d; n],
        s0: vec![config.s0; n],
        p_s_min: vec![0.0; 2 * n],
        p_s_max,
        x_min: vec![config.x_min; g + n],
        x_max: vec![config.x_max; g + n],
        penalty_matrix,
        z_ref,
        num_ref,
    };
    inst.validate()?;
    Ok(inst)
}
