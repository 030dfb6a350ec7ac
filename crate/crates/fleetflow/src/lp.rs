//! Dense two-phase simplex for linear programs with bounded variables.
//!
//! Maximizes `c.x` subject to sparse `<=` / `>=` / `=` rows and box bounds
//! `0 <= x_j <= u_j` (upper bounds may be infinite). Upper bounds are handled
//! inside the ratio test (nonbasic variables may sit at either bound and
//! bound-to-bound flips are cheap iterations), which keeps the tableau at one
//! row per constraint. Dantzig pricing with a switch to Bland's rule after a
//! degenerate stall provides anti-cycling; duals are read off the final
//! reduced costs of each row's logical column.
//!
//! Built for desk-scale programs (hundreds of rows, tens of thousands of
//! columns); there is no sparse factorization or periodic refactorization.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    kind: RowKind,
    rhs: f64,
}

/// Linear program under construction.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    upper: Vec<f64>,
    start_at_upper: Vec<bool>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// One dual per row, in `add_row` order.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    /// Pivot budget exhausted; carries the best iterate reached.
    IterationLimit(LpSolution),
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VState {
    Basic,
    AtLower,
    AtUpper,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const STALL_LIMIT: usize = 64;

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a variable with objective coefficient `obj` and bounds `[0, upper]`.
    pub fn add_var(&mut self, obj: f64, upper: f64) -> usize {
        assert!(upper >= 0.0, "upper bound must be non-negative");
        self.objective.push(obj);
        self.upper.push(upper);
        self.start_at_upper.push(false);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, kind: RowKind, rhs: f64, coeffs: &[(usize, f64)]) {
        for &(j, _) in coeffs {
            assert!(j < self.objective.len(), "row references unknown variable {j}");
        }
        self.rows.push(Row { coeffs: coeffs.to_vec(), kind, rhs });
    }

    /// Start `var` nonbasic at its upper bound (warm-start hint; requires a
    /// finite upper bound).
    pub fn set_initial_at_upper(&mut self, var: usize) {
        if self.upper[var].is_finite() {
            self.start_at_upper[var] = true;
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self, max_pivots: usize) -> LpOutcome {
        Tableau::build(self).solve(max_pivots)
    }

    /// Largest absolute violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(-xj).max(xj - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let gap = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Ge => row.rhs - lhs,
                RowKind::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst.max(0.0)
    }
}

struct Tableau<'a> {
    lp: &'a LinearProgram,
    m: usize,
    n_total: usize,
    n_structural: usize,
    /// Dense `m x n_total`, row-major: the current `B^-1 A`.
    t: Vec<f64>,
    /// Values of the basic variables, one per row.
    beta: Vec<f64>,
    /// Reduced costs `c_j - y.A_j` for the active phase.
    obj_row: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VState>,
    upper: Vec<f64>,
    /// First artificial column (artificials are never priced).
    art_start: usize,
    /// Per row: (column whose reduced cost yields the dual, its coefficient,
    /// the internal row sign vs. the user's row).
    dual_info: Vec<(usize, f64, f64)>,
    bland: bool,
    stall: usize,
}

impl<'a> Tableau<'a> {
    fn build(lp: &'a LinearProgram) -> Self {
        let m = lp.rows.len();
        let n = lp.objective.len();

        // Effective rhs under the initial nonbasic states decides each row's
        // sign and starting basic variable.
        let mut r_eff = Vec::with_capacity(m);
        for row in &lp.rows {
            let shift: f64 = row
                .coeffs
                .iter()
                .filter(|&&(j, _)| lp.start_at_upper[j])
                .map(|&(j, a)| a * lp.upper[j])
                .sum();
            r_eff.push(row.rhs - shift);
        }

        // Column layout: structural, one logical (slack/surplus) per Le/Ge
        // row, then artificials for rows whose logical cannot start basic.
        let mut n_total = n;
        let mut logical_col = vec![usize::MAX; m];
        for (r, row) in lp.rows.iter().enumerate() {
            if row.kind != RowKind::Eq {
                logical_col[r] = n_total;
                n_total += 1;
            }
        }
        let art_start = n_total;
        let mut art_col = vec![usize::MAX; m];
        for (r, row) in lp.rows.iter().enumerate() {
            let sign_pos = r_eff[r] >= 0.0;
            let logical_basic = match row.kind {
                RowKind::Le => sign_pos,
                RowKind::Ge => !sign_pos,
                RowKind::Eq => false,
            };
            if !logical_basic {
                art_col[r] = n_total;
                n_total += 1;
            }
        }

        let mut t = vec![0.0; m * n_total];
        let mut beta = vec![0.0; m];
        let mut basis = vec![0usize; m];
        let mut state = vec![VState::AtLower; n_total];
        let mut upper = vec![f64::INFINITY; n_total];
        upper[..n].copy_from_slice(&lp.upper);
        for j in 0..n {
            if lp.start_at_upper[j] {
                state[j] = VState::AtUpper;
            }
        }
        let mut dual_info = vec![(0usize, 1.0f64, 1.0f64); m];

        for (r, row) in lp.rows.iter().enumerate() {
            let sign = if r_eff[r] < 0.0 { -1.0 } else { 1.0 };
            let trow = &mut t[r * n_total..(r + 1) * n_total];
            for &(j, a) in &row.coeffs {
                trow[j] += sign * a;
            }
            let logical_coef = match row.kind {
                RowKind::Le => 1.0,
                RowKind::Ge => -1.0,
                RowKind::Eq => 0.0,
            };
            if row.kind != RowKind::Eq {
                trow[logical_col[r]] = sign * logical_coef;
            }
            let (dual_col, dual_coef) = if row.kind == RowKind::Eq {
                (art_col[r], 1.0)
            } else {
                (logical_col[r], sign * logical_coef)
            };
            dual_info[r] = (dual_col, dual_coef, sign);

            beta[r] = r_eff[r].abs();
            if art_col[r] != usize::MAX {
                trow[art_col[r]] = 1.0;
                basis[r] = art_col[r];
                state[art_col[r]] = VState::Basic;
            } else {
                basis[r] = logical_col[r];
                state[logical_col[r]] = VState::Basic;
            }
        }

        Tableau {
            lp,
            m,
            n_total,
            n_structural: n,
            t,
            beta,
            obj_row: vec![0.0; n_total],
            basis,
            state,
            upper,
            art_start,
            dual_info,
            bland: false,
            stall: 0,
        }
    }

    /// Recompute reduced costs `c - y A` for the given variable costs.
    fn reset_obj_row(&mut self, cost: &dyn Fn(usize) -> f64) {
        for j in 0..self.n_total {
            self.obj_row[j] = cost(j);
        }
        for r in 0..self.m {
            let cb = cost(self.basis[r]);
            if cb != 0.0 {
                let row = &self.t[r * self.n_total..(r + 1) * self.n_total];
                for (j, obj) in self.obj_row.iter_mut().enumerate() {
                    *obj -= cb * row[j];
                }
            }
        }
        for r in 0..self.m {
            self.obj_row[self.basis[r]] = 0.0;
        }
    }

    fn solve(mut self, max_pivots: usize) -> LpOutcome {
        let mut pivots_used = 0usize;

        // Phase 1: drive the artificial mass to zero.
        if self.art_start < self.n_total {
            let art_start = self.art_start;
            self.reset_obj_row(&|j| if j >= art_start { -1.0 } else { 0.0 });
            let infeasibility: f64 =
                (0..self.m).filter(|&r| self.basis[r] >= art_start).map(|r| self.beta[r]).sum();
            if infeasibility > FEAS_TOL {
                match self.run(max_pivots, true, &mut pivots_used) {
                    RunEnd::Optimal => {}
                    RunEnd::Unbounded => return LpOutcome::Unbounded,
                    RunEnd::Budget => return LpOutcome::IterationLimit(self.extract(pivots_used)),
                }
                let residual: f64 = (0..self.m)
                    .filter(|&r| self.basis[r] >= self.art_start)
                    .map(|r| self.beta[r])
                    .sum();
                if residual > FEAS_TOL {
                    return LpOutcome::Infeasible;
                }
            }
            // Artificials are pinned at zero from here on.
            for j in self.art_start..self.n_total {
                self.upper[j] = 0.0;
            }
        }

        // Phase 2: the real objective.
        let n = self.n_structural;
        let lp_obj: Vec<f64> = self.lp.objective.clone();
        self.reset_obj_row(&move |j| if j < n { lp_obj[j] } else { 0.0 });
        self.bland = false;
        self.stall = 0;
        match self.run(max_pivots, false, &mut pivots_used) {
            RunEnd::Optimal => LpOutcome::Optimal(self.extract(pivots_used)),
            RunEnd::Unbounded => LpOutcome::Unbounded,
            RunEnd::Budget => LpOutcome::IterationLimit(self.extract(pivots_used)),
        }
    }

    fn eligible(&self, j: usize) -> Option<f64> {
        if j >= self.art_start {
            return None;
        }
        match self.state[j] {
            VState::Basic => None,
            VState::AtLower => {
                if self.upper[j] <= PIVOT_TOL {
                    return None; // fixed variable
                }
                (self.obj_row[j] > COST_TOL).then_some(self.obj_row[j])
            }
            VState::AtUpper => (self.obj_row[j] < -COST_TOL).then_some(-self.obj_row[j]),
        }
    }

    fn price(&self) -> Option<usize> {
        if self.bland {
            (0..self.n_total).find(|&j| self.eligible(j).is_some())
        } else {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n_total {
                if let Some(gain) = self.eligible(j) {
                    if best.is_none_or(|(_, g)| gain > g) {
                        best = Some((j, gain));
                    }
                }
            }
            best.map(|(j, _)| j)
        }
    }

    fn run(&mut self, max_pivots: usize, phase_one: bool, pivots_used: &mut usize) -> RunEnd {
        loop {
            if phase_one {
                // Phase 1 is done as soon as no artificial mass remains.
                let infeasibility: f64 = (0..self.m)
                    .filter(|&r| self.basis[r] >= self.art_start)
                    .map(|r| self.beta[r])
                    .sum();
                if infeasibility <= FEAS_TOL * 0.5 {
                    return RunEnd::Optimal;
                }
            }
            let Some(enter) = self.price() else {
                return RunEnd::Optimal;
            };
            if *pivots_used >= max_pivots {
                return RunEnd::Budget;
            }
            *pivots_used += 1;

            let sigma = if self.state[enter] == VState::AtLower { 1.0 } else { -1.0 };

            // Ratio test: how far can the entering variable move?
            let mut t_max = self.upper[enter];
            let mut leave_row: Option<(usize, VState)> = None; // (row, bound the leaver hits)
            for r in 0..self.m {
                let a = sigma * self.t[r * self.n_total + enter];
                if a > PIVOT_TOL {
                    let ratio = self.beta[r].max(0.0) / a;
                    if ratio < t_max - 1e-12
                        || (ratio < t_max + 1e-12 && self.better_leaver(r, leave_row, enter))
                    {
                        t_max = ratio;
                        leave_row = Some((r, VState::AtLower));
                    }
                } else if a < -PIVOT_TOL {
                    let ub = self.upper[self.basis[r]];
                    if ub.is_finite() {
                        let ratio = (ub - self.beta[r]).max(0.0) / -a;
                        if ratio < t_max - 1e-12
                            || (ratio < t_max + 1e-12 && self.better_leaver(r, leave_row, enter))
                        {
                            t_max = ratio;
                            leave_row = Some((r, VState::AtUpper));
                        }
                    }
                }
            }

            if t_max.is_infinite() {
                return RunEnd::Unbounded;
            }

            let gain = self.obj_row[enter].abs() * t_max;
            if gain > 1e-13 {
                self.stall = 0;
                self.bland = false;
            } else {
                self.stall += 1;
                if self.stall >= STALL_LIMIT {
                    self.bland = true;
                }
            }

            match leave_row {
                None => {
                    // Bound flip: the entering variable crosses to its other
                    // bound without a basis change.
                    debug_assert!(self.upper[enter].is_finite());
                    for r in 0..self.m {
                        self.beta[r] -= sigma * t_max * self.t[r * self.n_total + enter];
                    }
                    self.state[enter] = if sigma > 0.0 { VState::AtUpper } else { VState::AtLower };
                }
                Some((r, hit_bound)) => {
                    let entering_value =
                        if sigma > 0.0 { t_max } else { self.upper[enter] - t_max };
                    for i in 0..self.m {
                        self.beta[i] -= sigma * t_max * self.t[i * self.n_total + enter];
                    }
                    let leaver = self.basis[r];
                    self.state[leaver] = hit_bound;
                    self.state[enter] = VState::Basic;
                    self.basis[r] = enter;
                    self.beta[r] = entering_value;
                    self.eliminate(r, enter);
                }
            }
        }
    }

    /// Tie-break for the leaving row: Bland mode picks the smallest basis
    /// variable index, otherwise the largest pivot magnitude wins.
    fn better_leaver(&self, r: usize, current: Option<(usize, VState)>, enter: usize) -> bool {
        match current {
            None => true,
            Some((rc, _)) => {
                if self.bland {
                    self.basis[r] < self.basis[rc]
                } else {
                    self.t[r * self.n_total + enter].abs() > self.t[rc * self.n_total + enter].abs()
                }
            }
        }
    }

    /// Gaussian elimination restoring the unit column of the new basic
    /// variable `enter` in row `r`.
    fn eliminate(&mut self, r: usize, enter: usize) {
        let n_total = self.n_total;
        let piv = self.t[r * n_total + enter];
        debug_assert!(piv.abs() > PIVOT_TOL * 0.1, "pivot too small: {piv}");
        let inv = 1.0 / piv;
        for j in 0..n_total {
            self.t[r * n_total + j] *= inv;
        }
        self.t[r * n_total + enter] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * n_total);
        let (prow, after) = rest.split_at_mut(n_total);
        for chunk in before.chunks_exact_mut(n_total).chain(after.chunks_exact_mut(n_total)) {
            let factor = chunk[enter];
            if factor != 0.0 {
                for (j, cell) in chunk.iter_mut().enumerate() {
                    *cell -= factor * prow[j];
                }
                chunk[enter] = 0.0;
            }
        }
        let factor = self.obj_row[enter];
        if factor != 0.0 {
            for (j, obj) in self.obj_row.iter_mut().enumerate() {
                *obj -= factor * prow[j];
            }
            self.obj_row[enter] = 0.0;
        }
    }

    fn extract(&self, pivots: usize) -> LpSolution {
        let mut x = vec![0.0; self.n_structural];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = match self.state[j] {
                VState::AtUpper => self.upper[j],
                _ => 0.0,
            };
        }
        for r in 0..self.m {
            let b = self.basis[r];
            if b < self.n_structural {
                x[b] = self.beta[r];
            }
        }
        let duals = self
            .dual_info
            .iter()
            .map(
                |&(col, coef, sign)| {
                    if coef == 0.0 {
                        0.0
                    } else {
                        sign * (-self.obj_row[col] / coef)
                    }
                },
            )
            .collect();
        let objective = x.iter().zip(&self.lp.objective).map(|(xi, ci)| xi * ci).sum();
        LpSolution { x, duals, objective, pivots }
    }
}

enum RunEnd {
    Optimal,
    Unbounded,
    Budget,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(lp: &LinearProgram) -> LpSolution {
        match lp.solve(100_000) {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn simple_max() {
        // max 3x + 2y s.t. x + y <= 4, x <= 2
        let mut lp = LinearProgram::new();
        let x = lp.add_var(3.0, f64::INFINITY);
        let y = lp.add_var(2.0, f64::INFINITY);
        lp.add_row(RowKind::Le, 4.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row(RowKind::Le, 2.0, &[(x, 1.0)]);
        let s = solve(&lp);
        assert!((s.objective - 10.0).abs() < 1e-9);
        assert!((s.x[x] - 2.0).abs() < 1e-9);
        assert!((s.x[y] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn duals_of_binding_rows() {
        // max 2x + 3y s.t. x + 2y <= 4, x + y <= 3; optimum (2,1), duals (1,1).
        let mut lp = LinearProgram::new();
        let x = lp.add_var(2.0, f64::INFINITY);
        let y = lp.add_var(3.0, f64::INFINITY);
        lp.add_row(RowKind::Le, 4.0, &[(x, 1.0), (y, 2.0)]);
        lp.add_row(RowKind::Le, 3.0, &[(x, 1.0), (y, 1.0)]);
        let s = solve(&lp);
        assert!((s.objective - 7.0).abs() < 1e-9);
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
        assert!((s.duals[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn upper_bound_optimum() {
        // max x: the box bound x <= 5 binds before the row does.
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 5.0);
        lp.add_row(RowKind::Le, 10.0, &[(x, 1.0)]);
        let s = solve(&lp);
        assert!((s.x[x] - 5.0).abs() < 1e-12);
        assert!((s.objective - 5.0).abs() < 1e-12);
    }

    #[test]
    fn segment_filling_respects_decreasing_marginals() {
        // Two bounded segments feeding one capacity: the better marginal
        // fills first.
        let mut lp = LinearProgram::new();
        let s1 = lp.add_var(3.0, 0.3);
        let s2 = lp.add_var(1.0, 0.7);
        lp.add_row(RowKind::Le, 0.6, &[(s1, 1.0), (s2, 1.0)]);
        let s = solve(&lp);
        assert!((s.x[s1] - 0.3).abs() < 1e-9);
        assert!((s.x[s2] - 0.3).abs() < 1e-9);
        assert!((s.objective - 1.2).abs() < 1e-9);
        // Capacity shadow price equals the marginal of the partially filled
        // segment.
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_and_phase_one() {
        // max x + y s.t. x + y = 2, x - y = 0 -> (1,1).
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, f64::INFINITY);
        let y = lp.add_var(1.0, f64::INFINITY);
        lp.add_row(RowKind::Eq, 2.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row(RowKind::Eq, 0.0, &[(x, 1.0), (y, -1.0)]);
        let s = solve(&lp);
        assert!((s.x[x] - 1.0).abs() < 1e-9);
        assert!((s.x[y] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_dual_sign() {
        // max x s.t. x = 2: dual is +1 (objective rises with the rhs).
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, f64::INFINITY);
        lp.add_row(RowKind::Eq, 2.0, &[(x, 1.0)]);
        let s = solve(&lp);
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ge_row_dual_sign() {
        // max -x s.t. x >= 2: optimum x = 2, dual -1.
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, f64::INFINITY);
        lp.add_row(RowKind::Ge, 2.0, &[(x, 1.0)]);
        let s = solve(&lp);
        assert!((s.x[x] - 2.0).abs() < 1e-9);
        assert!((s.duals[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, f64::INFINITY);
        lp.add_row(RowKind::Le, -1.0, &[(x, 1.0)]);
        assert!(matches!(lp.solve(1000), LpOutcome::Infeasible));
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new();
        let _x = lp.add_var(1.0, f64::INFINITY);
        let y = lp.add_var(0.0, f64::INFINITY);
        lp.add_row(RowKind::Le, 1.0, &[(y, 1.0)]);
        assert!(matches!(lp.solve(1000), LpOutcome::Unbounded));
    }

    #[test]
    fn redundant_equalities_tolerated() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 1.0);
        let y = lp.add_var(0.0, f64::INFINITY);
        lp.add_row(RowKind::Eq, 2.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row(RowKind::Eq, 4.0, &[(x, 2.0), (y, 2.0)]);
        let s = solve(&lp);
        assert!((s.x[x] - 1.0).abs() < 1e-9);
        assert!((s.x[y] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_equality() {
        // max -x - y s.t. x - y = -3 -> (0, 3).
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, f64::INFINITY);
        let y = lp.add_var(-1.0, f64::INFINITY);
        lp.add_row(RowKind::Eq, -3.0, &[(x, 1.0), (y, -1.0)]);
        let s = solve(&lp);
        assert!(s.x[x].abs() < 1e-9);
        assert!((s.x[y] - 3.0).abs() < 1e-9);
        // Relaxing the rhs by +1 lets y shrink by 1: objective +1.
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_hint_gives_same_optimum() {
        let mut lp = LinearProgram::new();
        let s1 = lp.add_var(3.0, 0.3);
        let s2 = lp.add_var(1.0, 0.7);
        lp.add_row(RowKind::Le, 0.6, &[(s1, 1.0), (s2, 1.0)]);
        lp.set_initial_at_upper(s1);
        let s = solve(&lp);
        assert!((s.objective - 1.2).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Many rows intersecting at the origin force degenerate pivots.
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.75, f64::INFINITY);
        let y = lp.add_var(-150.0, f64::INFINITY);
        let z = lp.add_var(0.02, f64::INFINITY);
        let w = lp.add_var(-6.0, f64::INFINITY);
        lp.add_row(RowKind::Le, 0.0, &[(x, 0.25), (y, -60.0), (z, -0.04), (w, 9.0)]);
        lp.add_row(RowKind::Le, 0.0, &[(x, 0.5), (y, -90.0), (z, -0.02), (w, 3.0)]);
        lp.add_row(RowKind::Le, 1.0, &[(z, 1.0)]);
        let s = solve(&lp);
        assert!((s.objective - 0.05).abs() < 1e-9, "objective {}", s.objective);
    }

    #[test]
    fn zero_rhs_capacity_start() {
        // All rows have zero rhs: the zero solution is optimal.
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, f64::INFINITY);
        let w = lp.add_var(0.0, f64::INFINITY);
        lp.add_row(RowKind::Le, 0.0, &[(x, 1.0), (w, -1.0)]);
        lp.add_row(RowKind::Le, 0.0, &[(w, 1.0)]);
        let s = solve(&lp);
        assert!(s.objective.abs() < 1e-12);
    }
}
