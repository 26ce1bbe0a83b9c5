//! Solver-facing problem encoding.
//!
//! Every model in the crate is lowered to a [`CanonicalProblem`]:
//!
//! ```text
//! minimize    Σ_i w_i (a_iᵀz − g_i)²  +  cᵀz  +  c0
//! subject to  E z = e,   F z ≤ f,   lower ≤ z ≤ upper,
//!             optional: Σ_j w_j (a_jᵀz − g_j)² + ℓᵀz + k ≤ rhs
//!             z_i ∈ {0, 1} where the integrality mask is set
//! ```
//!
//! Keeping the quadratic part as weighted squares makes it PSD whenever all
//! weights are non-negative and gives the factor form needed for the conic cap.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::layout::ModelLayout;

/// Sparse linear expression `Σ coef[k] · z[idx[k]]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub idx: Vec<usize>,
    pub coef: Vec<f64>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            idx: Vec::with_capacity(n),
            coef: Vec::with_capacity(n),
        }
    }

    pub fn term(mut self, i: usize, c: f64) -> Self {
        self.push(i, c);
        self
    }

    pub fn push(&mut self, i: usize, c: f64) {
        if c != 0.0 {
            self.idx.push(i);
            self.coef.push(c);
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.idx.iter().zip(&self.coef).map(|(&i, &c)| c * z[i]).sum()
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().copied().zip(self.coef.iter().copied())
    }
}

/// What a constraint row encodes, so duals and residuals can be mapped back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowTag {
    /// Energy balance of period `t`.
    Balance { t: usize },
    /// Storage state transition from `t` to `t + 1`.
    Dynamics { t: usize, n: usize },
    /// Initial state of charge.
    Initial { n: usize },
    /// `s[t][n] ≤ x_s[n] · Δ`.
    StorageCap { t: usize, n: usize },
    /// `p[t][g] ≤ F[t][g] · x_p[g]`.
    GenCap { t: usize, g: usize },
    /// `b[i] · X_min[i] ≤ x[i]`.
    InvLower { i: usize },
    /// `x[i] ≤ b[i] · X_max[i]`.
    InvUpper { i: usize },
    /// Links a cluster's mean storage state to its boundary states.
    MeanState { k: usize, n: usize, which: u8 },
    /// Linear cost cap `J(z) ≤ J_ub`.
    CostCap,
    /// Benders optimality cut number `j`.
    Cut { j: usize },
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub expr: LinExpr,
    pub rhs: f64,
    pub tag: RowTag,
}

/// `weight · (exprᵀz − target)²`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareTerm {
    pub expr: LinExpr,
    pub target: f64,
    pub weight: f64,
}

impl SquareTerm {
    pub fn eval(&self, z: &[f64]) -> f64 {
        let r = self.expr.eval(z) - self.target;
        self.weight * r * r
    }
}

/// Convex quadratic inequality `Σ squares + linearᵀz + constant ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadCap {
    pub linear: LinExpr,
    pub squares: Vec<SquareTerm>,
    pub constant: f64,
    pub rhs: f64,
}

impl QuadCap {
    pub fn lhs(&self, z: &[f64]) -> f64 {
        self.linear.eval(z) + self.squares.iter().map(|s| s.eval(z)).sum::<f64>() + self.constant
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalProblem {
    pub num_vars: usize,
    pub linear: Vec<f64>,
    pub squares: Vec<SquareTerm>,
    pub constant: f64,
    pub equalities: Vec<Row>,
    pub inequalities: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub quad_cap: Option<QuadCap>,
    /// Present for problems built from a GEP model; maps indices to roles.
    pub layout: Option<ModelLayout>,
}

/// Largest constraint violations of a candidate point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Violation {
    pub equality: f64,
    pub inequality: f64,
    pub bound: f64,
    pub cap: f64,
    pub integrality: f64,
}

impl Violation {
    pub fn max(&self) -> f64 {
        self.equality
            .max(self.inequality)
            .max(self.bound)
            .max(self.cap)
            .max(self.integrality)
    }

    /// Largest violation, ignoring integrality.
    pub fn continuous(&self) -> f64 {
        self.equality.max(self.inequality).max(self.bound).max(self.cap)
    }
}

impl CanonicalProblem {
    /// Empty problem with `n` free continuous variables and zero objective.
    pub fn new(n: usize) -> Self {
        Self {
            num_vars: n,
            linear: vec![0.0; n],
            squares: Vec::new(),
            constant: 0.0,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            integer: vec![false; n],
            quad_cap: None,
            layout: None,
        }
    }

    pub fn add_eq(&mut self, expr: LinExpr, rhs: f64, tag: RowTag) {
        self.equalities.push(Row { expr, rhs, tag });
    }

    pub fn add_le(&mut self, expr: LinExpr, rhs: f64, tag: RowTag) {
        self.inequalities.push(Row { expr, rhs, tag });
    }

    pub fn integer_vars(&self) -> Vec<usize> {
        (0..self.num_vars).filter(|&i| self.integer[i]).collect()
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    /// Copy with the integrality mask cleared.
    pub fn relaxed(&self) -> Self {
        let mut p = self.clone();
        p.integer.iter_mut().for_each(|b| *b = false);
        p
    }

    pub fn quadratic_value(&self, z: &[f64]) -> f64 {
        self.squares.iter().map(|s| s.eval(z)).sum()
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().zip(z).map(|(c, v)| c * v).sum();
        lin + self.quadratic_value(z) + self.constant
    }

    pub fn violation(&self, z: &[f64]) -> Violation {
        let mut v = Violation::default();
        for r in &self.equalities {
            v.equality = v.equality.max((r.expr.eval(z) - r.rhs).abs());
        }
        for r in &self.inequalities {
            v.inequality = v.inequality.max(r.expr.eval(z) - r.rhs);
        }
        for i in 0..self.num_vars {
            v.bound = v.bound.max(self.lower[i] - z[i]).max(z[i] - self.upper[i]);
            if self.integer[i] {
                v.integrality = v.integrality.max((z[i] - z[i].round()).abs());
            }
        }
        if let Some(cap) = &self.quad_cap {
            v.cap = (cap.lhs(z) - cap.rhs).max(0.0);
        }
        v
    }

    /// Objective Hessian `H` (so the quadratic part is `½ zᵀHz + …`), as
    /// upper-triangular triplets with duplicates summed.
    pub fn hessian_upper(&self) -> Vec<(usize, usize, f64)> {
        let mut acc = std::collections::BTreeMap::new();
        for s in &self.squares {
            for (a, ca) in s.expr.iter() {
                for (b, cb) in s.expr.iter() {
                    if a <= b {
                        *acc.entry((a, b)).or_insert(0.0) += 2.0 * s.weight * ca * cb;
                    }
                }
            }
        }
        acc.into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|((i, j), v)| (i, j, v))
            .collect()
    }

    pub fn var_name(&self, i: usize) -> String {
        match &self.layout {
            Some(l) => l.name(i),
            None => format!("z{i}"),
        }
    }

    /// Row-wise text listing for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# vars {} eq {} le {} squares {} integer {}",
            self.num_vars,
            self.equalities.len(),
            self.inequalities.len(),
            self.squares.len(),
            self.integer.iter().filter(|&&b| b).count()
        );
        let fmt_expr = |e: &LinExpr| -> String {
            let mut s = String::new();
            for (i, c) in e.iter() {
                let _ = write!(s, " {:+} {}", c, self.var_name(i));
            }
            s
        };
        out.push_str("min");
        for (i, &c) in self.linear.iter().enumerate() {
            if c != 0.0 {
                let _ = write!(out, " {:+} {}", c, self.var_name(i));
            }
        }
        for s in &self.squares {
            let _ = write!(out, " + {} ({} - {})^2", s.weight, fmt_expr(&s.expr).trim_start(), s.target);
        }
        let _ = writeln!(out, " {:+}", self.constant);
        for r in &self.equalities {
            let _ = writeln!(out, "{:?}:{} = {}", r.tag, fmt_expr(&r.expr), r.rhs);
        }
        for r in &self.inequalities {
            let _ = writeln!(out, "{:?}:{} <= {}", r.tag, fmt_expr(&r.expr), r.rhs);
        }
        if let Some(cap) = &self.quad_cap {
            let _ = write!(out, "QuadCap:{}", fmt_expr(&cap.linear));
            for s in &cap.squares {
                let _ = write!(out, " + {} ({} - {})^2", s.weight, fmt_expr(&s.expr).trim_start(), s.target);
            }
            let _ = writeln!(out, " {:+} <= {}", cap.constant, cap.rhs);
        }
        for i in 0..self.num_vars {
            let kind = if self.integer[i] { " integer" } else { "" };
            let _ = writeln!(
                out,
                "{} <= {} <= {}{}",
                self.lower[i],
                self.var_name(i),
                self.upper[i],
                kind
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_and_violation() {
        let mut p = CanonicalProblem::new(2);
        p.linear = vec![1.0, 2.0];
        p.constant = 3.0;
        p.squares.push(SquareTerm {
            expr: LinExpr::new().term(0, 1.0).term(1, -1.0),
            target: 1.0,
            weight: 2.0,
        });
        p.add_eq(LinExpr::new().term(0, 1.0).term(1, 1.0), 2.0, RowTag::Other);
        p.lower = vec![0.0, 0.0];
        p.upper = vec![1.0, 1.0];
        p.integer[1] = true;
        let z = [1.5, 0.25];
        // 1.5 + 0.5 + 3 + 2·(1.25 − 1)²
        assert!((p.objective(&z) - (5.0 + 2.0 * 0.0625)).abs() < 1e-12);
        let v = p.violation(&z);
        assert!((v.equality - 0.25).abs() < 1e-12);
        assert!((v.bound - 0.5).abs() < 1e-12);
        assert!((v.integrality - 0.25).abs() < 1e-12);
    }

    #[test]
    fn hessian_of_single_square() {
        let mut p = CanonicalProblem::new(2);
        p.squares.push(SquareTerm {
            expr: LinExpr::new().term(0, 1.0).term(1, 2.0),
            target: 0.0,
            weight: 1.0,
        });
        // (z0 + 2 z1)² = ½ zᵀ [[2, 4], [4, 8]] z
        assert_eq!(p.hessian_upper(), vec![(0, 0, 2.0), (0, 1, 4.0), (1, 1, 8.0)]);
        assert!(p.dump().contains("(+1 z0 +2 z1 - 0)^2"));
    }
}
