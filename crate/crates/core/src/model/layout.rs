use serde::{Deserialize, Serialize};

/// Variable positions of a GEP model in its canonical vector.
///
/// Block order: `x` (G+N), `b` (G+N), `p` (P×G), `s` ((P+1)×N), `p_c` (P×N),
/// `p_d` (P×N), `d_ns` (P), then optional cluster mean states. `P` is the number
/// of periods (T for full-scale models, K for aggregated ones). Subproblems
/// with fixed capacities omit the `x` and `b` blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelLayout {
    pub g: usize,
    pub n: usize,
    pub periods: usize,
    pub has_investment: bool,
    /// Per period: slot in the mean-state block, if that period has one.
    pub mean_slot: Vec<Option<usize>>,
}

impl ModelLayout {
    pub fn new(g: usize, n: usize, periods: usize, has_investment: bool) -> Self {
        Self {
            g,
            n,
            periods,
            has_investment,
            mean_slot: vec![None; periods],
        }
    }

    pub fn num_assets(&self) -> usize {
        self.g + self.n
    }

    fn inv_len(&self) -> usize {
        if self.has_investment {
            self.num_assets()
        } else {
            0
        }
    }

    pub fn x(&self, i: usize) -> usize {
        debug_assert!(self.has_investment && i < self.num_assets());
        i
    }

    pub fn b(&self, i: usize) -> usize {
        debug_assert!(self.has_investment && i < self.num_assets());
        self.num_assets() + i
    }

    fn p_off(&self) -> usize {
        2 * self.inv_len()
    }

    pub fn p(&self, t: usize, g: usize) -> usize {
        self.p_off() + t * self.g + g
    }

    fn s_off(&self) -> usize {
        self.p_off() + self.periods * self.g
    }

    /// State at the start of period `t`; `t == periods` is the terminal state.
    pub fn s(&self, t: usize, n: usize) -> usize {
        self.s_off() + t * self.n + n
    }

    fn pc_off(&self) -> usize {
        self.s_off() + (self.periods + 1) * self.n
    }

    pub fn pc(&self, t: usize, n: usize) -> usize {
        self.pc_off() + t * self.n + n
    }

    fn pd_off(&self) -> usize {
        self.pc_off() + self.periods * self.n
    }

    pub fn pd(&self, t: usize, n: usize) -> usize {
        self.pd_off() + t * self.n + n
    }

    fn dns_off(&self) -> usize {
        self.pd_off() + self.periods * self.n
    }

    pub fn dns(&self, t: usize) -> usize {
        self.dns_off() + t
    }

    fn mean_off(&self) -> usize {
        self.dns_off() + self.periods
    }

    pub fn num_mean_slots(&self) -> usize {
        self.mean_slot.iter().filter(|s| s.is_some()).count()
    }

    /// Mean storage state of period `t`, when the period carries one.
    pub fn mean_state(&self, t: usize, n: usize) -> Option<usize> {
        self.mean_slot[t].map(|j| self.mean_off() + j * self.n + n)
    }

    /// Core variable count without the mean-state block:
    /// `2(G+N) + P·G + (P+1)·N + 2P·N + P`.
    pub fn core_len(&self) -> usize {
        self.mean_off()
    }

    pub fn num_vars(&self) -> usize {
        self.mean_off() + self.num_mean_slots() * self.n
    }

    /// Index of the `j`-th component of `z_op[t] = (p, d_ns, s, p_c, p_d)`,
    /// with the state component redirected to the mean state when present.
    pub fn op_component(&self, t: usize, j: usize) -> usize {
        let (g, n) = (self.g, self.n);
        if j < g {
            self.p(t, j)
        } else if j == g {
            self.dns(t)
        } else if j < g + 1 + n {
            let k = j - g - 1;
            self.mean_state(t, k).unwrap_or_else(|| self.s(t, k))
        } else if j < g + 1 + 2 * n {
            self.pc(t, j - g - 1 - n)
        } else {
            self.pd(t, j - g - 1 - 2 * n)
        }
    }

    pub fn name(&self, i: usize) -> String {
        let na = self.inv_len();
        if i < na {
            return format!("x[{i}]");
        }
        if i < 2 * na {
            return format!("b[{}]", i - na);
        }
        let rel = |off: usize, w: usize| {
            let r = i - off;
            (r / w.max(1), r % w.max(1))
        };
        if i < self.s_off() {
            let (t, g) = rel(self.p_off(), self.g);
            format!("p[{t}][{g}]")
        } else if i < self.pc_off() {
            let (t, n) = rel(self.s_off(), self.n);
            format!("s[{t}][{n}]")
        } else if i < self.pd_off() {
            let (t, n) = rel(self.pc_off(), self.n);
            format!("pc[{t}][{n}]")
        } else if i < self.dns_off() {
            let (t, n) = rel(self.pd_off(), self.n);
            format!("pd[{t}][{n}]")
        } else if i < self.mean_off() {
            format!("dns[{}]", i - self.dns_off())
        } else if i < self.num_vars() {
            let (j, n) = rel(self.mean_off(), self.n);
            let t = self.mean_slot.iter().position(|s| *s == Some(j)).unwrap_or(usize::MAX);
            format!("smean[{t}][{n}]")
        } else {
            format!("z{i}")
        }
    }
}
