//! Instance data: costs, technical limits and input time series.

mod generate;
mod io;

pub use generate::{generate_instance, GenConfig};
pub use io::{load_instance, load_timeseries_csv, save_instance, TimeSeries};

use serde::{Deserialize, Serialize};

use crate::error::{GepError, Result};

/// All parameters and input series of one generation expansion problem.
///
/// Asset vectors of length `G + N` list generators first, then storage units.
/// Storage power limits of length `2N` list charging limits, then discharging
/// limits. Energies are in MWh, powers in MW, costs in €.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GepInstance {
    pub num_generators: usize,
    pub num_storage: usize,
    pub num_periods: usize,
    /// Hours per period.
    pub delta: f64,
    /// Investment cost per MW, length `G + N`.
    pub c_inv: Vec<f64>,
    /// Operational cost per MWh, length `G`.
    pub c_p: Vec<f64>,
    /// Cost of non-supplied energy per MWh.
    pub c_ns: f64,
    /// Energy demand per period (MWh), length `T`.
    pub demand: Vec<f64>,
    /// Capacity factors, `T` rows of length `G`.
    pub cap_factor: Vec<Vec<f64>>,
    pub eta_c: Vec<f64>,
    pub eta_d: Vec<f64>,
    /// Initial state of charge (MWh).
    pub s0: Vec<f64>,
    pub p_s_min: Vec<f64>,
    pub p_s_max: Vec<f64>,
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    /// `R` rows of length `G + 3N + 1`, acting on `(p, d_ns, s, p_c, p_d)`.
    pub penalty_matrix: Vec<Vec<f64>>,
    /// Reference values, `T` rows of length `R`.
    pub z_ref: Vec<Vec<f64>>,
    pub num_ref: usize,
}

impl GepInstance {
    pub fn g(&self) -> usize {
        self.num_generators
    }

    pub fn n(&self) -> usize {
        self.num_storage
    }

    pub fn t(&self) -> usize {
        self.num_periods
    }

    pub fn num_assets(&self) -> usize {
        self.num_generators + self.num_storage
    }

    /// Length of the operational vector `(p, d_ns, s, p_c, p_d)` of one period.
    pub fn op_dim(&self) -> usize {
        self.num_generators + 3 * self.num_storage + 1
    }

    pub fn charge_limits(&self, n: usize) -> (f64, f64) {
        (self.p_s_min[n], self.p_s_max[n])
    }

    pub fn discharge_limits(&self, n: usize) -> (f64, f64) {
        let k = self.num_storage + n;
        (self.p_s_min[k], self.p_s_max[k])
    }

    /// Range of the per-period net stored energy rate `η_c p_c − η_d p_d`.
    pub fn net_charge_range(&self, n: usize) -> (f64, f64) {
        let (c_lo, c_hi) = self.charge_limits(n);
        let (d_lo, d_hi) = self.discharge_limits(n);
        (
            self.eta_c[n] * c_lo - self.eta_d[n] * d_hi,
            self.eta_c[n] * c_hi - self.eta_d[n] * d_lo,
        )
    }

    /// Whether any penalty row touches the storage-state columns.
    pub fn penalty_uses_states(&self) -> bool {
        let (g, n) = (self.g(), self.n());
        self.penalty_matrix
            .iter()
            .any(|row| row[g + 1..g + 1 + n].iter().any(|&a| a != 0.0))
    }

    /// Check every documented invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        let (g, n, t) = (self.g(), self.n(), self.t());
        let na = g + n;
        if t == 0 {
            return Err(GepError::field("num_periods", "must be at least 1"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(GepError::field("delta", "must be finite and positive"));
        }
        check_len("c_inv", &self.c_inv, na)?;
        check_len("c_p", &self.c_p, g)?;
        check_len("demand", &self.demand, t)?;
        check_len("eta_c", &self.eta_c, n)?;
        check_len("eta_d", &self.eta_d, n)?;
        check_len("s0", &self.s0, n)?;
        check_len("p_s_min", &self.p_s_min, 2 * n)?;
        check_len("p_s_max", &self.p_s_max, 2 * n)?;
        check_len("x_min", &self.x_min, na)?;
        check_len("x_max", &self.x_max, na)?;
        for (name, v) in [
            ("c_inv", &self.c_inv),
            ("c_p", &self.c_p),
            ("demand", &self.demand),
            ("eta_c", &self.eta_c),
            ("eta_d", &self.eta_d),
            ("s0", &self.s0),
            ("p_s_min", &self.p_s_min),
            ("p_s_max", &self.p_s_max),
            ("x_min", &self.x_min),
            ("x_max", &self.x_max),
        ] {
            nonneg(name, v)?;
        }
        if !(self.c_ns.is_finite() && self.c_ns >= 0.0) {
            return Err(GepError::field("c_ns", "must be finite and non-negative"));
        }
        if self.cap_factor.len() != t {
            return Err(GepError::field(
                "cap_factor",
                format!("expected {t} rows, found {}", self.cap_factor.len()),
            ));
        }
        for (row_idx, row) in self.cap_factor.iter().enumerate() {
            if row.len() != g {
                return Err(GepError::field(
                    "cap_factor",
                    format!("row {row_idx} has {} entries, expected {g}", row.len()),
                ));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
                return Err(GepError::field(
                    "cap_factor",
                    format!("row {row_idx} has entry {v} outside [0, 1]"),
                ));
            }
        }
        for i in 0..na {
            if self.x_min[i] > self.x_max[i] {
                return Err(GepError::field("x_min", format!("entry {i} exceeds x_max")));
            }
        }
        for i in 0..2 * n {
            if self.p_s_min[i] > self.p_s_max[i] {
                return Err(GepError::field("p_s_min", format!("entry {i} exceeds p_s_max")));
            }
        }
        if self.penalty_matrix.len() != self.num_ref {
            return Err(GepError::field(
                "penalty_matrix",
                format!("expected {} rows, found {}", self.num_ref, self.penalty_matrix.len()),
            ));
        }
        let op = self.op_dim();
        for (r, row) in self.penalty_matrix.iter().enumerate() {
            if row.len() != op || row.iter().any(|v| !v.is_finite()) {
                return Err(GepError::field(
                    "penalty_matrix",
                    format!("row {r} must hold {op} finite entries"),
                ));
            }
        }
        if self.z_ref.len() != t {
            return Err(GepError::field(
                "z_ref",
                format!("expected {t} rows, found {}", self.z_ref.len()),
            ));
        }
        for (row_idx, row) in self.z_ref.iter().enumerate() {
            if row.len() != self.num_ref || row.iter().any(|v| !v.is_finite()) {
                return Err(GepError::field(
                    "z_ref",
                    format!("row {row_idx} must hold {} finite entries", self.num_ref),
                ));
            }
        }
        Ok(())
    }
}

fn check_len(name: &str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(GepError::field(
            name,
            format!("expected length {expected}, found {}", v.len()),
        ))
    }
}

fn nonneg(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        None => Ok(()),
        Some(i) => Err(GepError::field(
            name,
            format!("entry {i} = {} must be finite and non-negative", v[i]),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GepInstance {
        generate_instance(&GenConfig::new(2, 1, 4, 3)).unwrap()
    }

    #[test]
    fn validation_names_fields() {
        let mut inst = tiny();
        inst.cap_factor[1][0] = 1.5;
        let err = inst.validate().unwrap_err().to_string();
        assert!(err.contains("cap_factor"), "{err}");

        let mut inst = tiny();
        inst.x_min[0] = 2.0;
        assert!(inst.validate().unwrap_err().to_string().contains("x_min"));

        let mut inst = tiny();
        inst.demand.pop();
        assert!(inst.validate().unwrap_err().to_string().contains("demand"));

        let mut inst = tiny();
        inst.c_inv[0] = f64::NAN;
        assert!(inst.validate().unwrap_err().to_string().contains("c_inv"));
    }

    #[test]
    fn net_charge_range_uses_efficiencies() {
        let inst = tiny();
        let (lo, hi) = inst.net_charge_range(0);
        assert!((hi - 0.9 * inst.p_s_max[0]).abs() < 1e-12);
        assert!((lo + 1.1 * inst.p_s_max[1]).abs() < 1e-12);
        assert!(inst.penalty_uses_states());
    }
}
