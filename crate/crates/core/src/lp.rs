//! Dense two-phase primal simplex.
//!
//! Maximizes `c^T x` subject to `A_eq x = b_eq`, `A_ub x <= b_ub` and box
//! bounds `lower <= x <= upper`. Finite upper bounds are handled implicitly
//! (nonbasic variables may sit at either bound) so box constraints do not add
//! rows. Bland's smallest-index rule picks both the entering and the leaving
//! variable, which rules out cycling on degenerate programs such as the
//! assignment polytope.

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    /// Objective coefficients (maximized).
    pub objective: Vec<f64>,
    pub eq_lhs: Matrix,
    pub eq_rhs: Vec<f64>,
    pub ub_lhs: Matrix,
    pub ub_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// Program over `n` variables with no constraints and bounds `[0, +inf)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            eq_lhs: Matrix::zeros(0, n),
            eq_rhs: Vec::new(),
            ub_lhs: Matrix::zeros(0, n),
            ub_rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.eq_rhs.len() + self.ub_rhs.len()
    }

    pub fn with_equalities(mut self, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        self.eq_lhs = Matrix::from_vec(rows.len(), self.num_vars(), rows.concat());
        self.eq_rhs = rhs;
        self
    }

    pub fn with_inequalities(mut self, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        self.ub_lhs = Matrix::from_vec(rows.len(), self.num_vars(), rows.concat());
        self.ub_rhs = rhs;
        self
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.num_vars());
        let mut data = self.eq_lhs.as_slice().to_vec();
        data.extend(row);
        self.eq_lhs = Matrix::from_vec(self.eq_rhs.len() + 1, self.num_vars(), data);
        self.eq_rhs.push(rhs);
    }

    /// Number of finite entries among the box bounds.
    pub fn num_finite_bounds(&self) -> usize {
        self.lower
            .iter()
            .chain(&self.upper)
            .filter(|b| b.is_finite())
            .count()
    }

    pub fn check_dimensions(&self) -> Result<(), String> {
        let n = self.num_vars();
        if self.eq_lhs.cols() != n && self.eq_lhs.rows() > 0 {
            return Err(format!("eq_lhs has {} columns, expected {n}", self.eq_lhs.cols()));
        }
        if self.eq_lhs.rows() != self.eq_rhs.len() {
            return Err("eq_lhs rows differ from eq_rhs length".into());
        }
        if self.ub_lhs.cols() != n && self.ub_lhs.rows() > 0 {
            return Err(format!("ub_lhs has {} columns, expected {n}", self.ub_lhs.cols()));
        }
        if self.ub_lhs.rows() != self.ub_rhs.len() {
            return Err("ub_lhs rows differ from ub_rhs length".into());
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err("bound vectors have the wrong length".into());
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if !finite(&self.objective)
            || !finite(self.eq_lhs.as_slice())
            || !finite(&self.eq_rhs)
            || !finite(self.ub_lhs.as_slice())
            || !finite(&self.ub_rhs)
        {
            return Err("non-finite coefficient".into());
        }
        if self.lower.iter().any(|&l| l == f64::INFINITY || l.is_nan())
            || self.upper.iter().any(|&u| u == f64::NEG_INFINITY || u.is_nan())
        {
            return Err("invalid bound".into());
        }
        Ok(())
    }

    /// Max-norm violation of all constraints and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, b) in self.eq_rhs.iter().enumerate() {
            worst = worst.max((crate::matrix::dot(self.eq_lhs.row(i), x) - b).abs());
        }
        for (i, b) in self.ub_rhs.iter().enumerate() {
            worst = worst.max(crate::matrix::dot(self.ub_lhs.row(i), x) - b);
        }
        for ((xi, l), u) in x.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(l - xi).max(xi - u);
        }
        worst
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        crate::matrix::dot(&self.objective, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal solution; empty unless `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Dual values, equalities first then inequalities; empty unless optimal.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    fn failed(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            objective_value: f64::NAN,
            duals: Vec::new(),
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Pivot and optimality tolerance.
    pub tol: f64,
    /// Relative feasibility tolerance for the phase-1 optimum.
    pub feasibility_tol: f64,
    /// Iteration budget; `None` means `50 * (vars + constraints)`.
    pub max_iters: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            feasibility_tol: 1e-7,
            max_iters: None,
        }
    }
}

/// Solves with default options.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    solve_with(lp, &SolverOptions::default())
}

/// How an original variable maps onto nonnegative internal columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = offset + col`
    Shifted { col: usize, offset: f64 },
    /// `x = offset - col`
    Mirrored { col: usize, offset: f64 },
    /// `x = pos - neg`
    Split { pos: usize, neg: usize },
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> LpSolution {
    if let Err(e) = lp.check_dimensions() {
        panic!("malformed linear program: {e}");
    }
    let n_orig = lp.num_vars();
    let m_eq = lp.eq_rhs.len();
    let m_ub = lp.ub_rhs.len();
    let m = m_eq + m_ub;

    // internal columns: transformed structurals, then one slack per inequality
    let mut maps = Vec::with_capacity(n_orig);
    let mut upper = Vec::new();
    let mut cost = Vec::new();
    for k in 0..n_orig {
        let (l, u, c) = (lp.lower[k], lp.upper[k], lp.objective[k]);
        if l.is_finite() {
            if u < l {
                return LpSolution::failed(LpStatus::Infeasible, 0);
            }
            maps.push(VarMap::Shifted { col: upper.len(), offset: l });
            upper.push(u - l);
            cost.push(c);
        } else if u.is_finite() {
            maps.push(VarMap::Mirrored { col: upper.len(), offset: u });
            upper.push(f64::INFINITY);
            cost.push(-c);
        } else {
            let pos = upper.len();
            maps.push(VarMap::Split { pos, neg: pos + 1 });
            upper.extend([f64::INFINITY, f64::INFINITY]);
            cost.extend([c, -c]);
        }
    }
    let n_struct = upper.len();
    let n_slack = m_ub;
    let n_real = n_struct + n_slack;
    upper.extend(std::iter::repeat_n(f64::INFINITY, n_slack));
    cost.extend(std::iter::repeat_n(0.0, n_slack));

    // constraint rows over internal columns
    let mut a = Matrix::zeros(m, n_real);
    let mut b = vec![0.0; m];
    for r in 0..m {
        let (row, rhs) = if r < m_eq {
            (lp.eq_lhs.row(r), lp.eq_rhs[r])
        } else {
            (lp.ub_lhs.row(r - m_eq), lp.ub_rhs[r - m_eq])
        };
        let mut rhs = rhs;
        for (k, &coef) in row.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            match maps[k] {
                VarMap::Shifted { col, offset } => {
                    a[(r, col)] = coef;
                    rhs -= coef * offset;
                }
                VarMap::Mirrored { col, offset } => {
                    a[(r, col)] = -coef;
                    rhs -= coef * offset;
                }
                VarMap::Split { pos, neg } => {
                    a[(r, pos)] = coef;
                    a[(r, neg)] = -coef;
                }
            }
        }
        if r >= m_eq {
            a[(r, n_struct + (r - m_eq))] = 1.0;
        }
        b[r] = rhs;
    }
    let sign: Vec<f64> = b.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect();
    for r in 0..m {
        if sign[r] < 0.0 {
            b[r] = -b[r];
            for x in a.row_mut(r) {
                *x = -*x;
            }
        }
    }

    let max_iters = opts
        .max_iters
        .unwrap_or(50 * (lp.num_vars() + lp.num_constraints()).max(1));
    let mut tab = Tableau::new(&a, &b, upper, opts.tol);

    // phase 1: maximize -sum(artificials)
    let mut phase1_cost = vec![0.0; tab.ncols];
    for r in 0..m {
        phase1_cost[n_real + r] = -1.0;
    }
    tab.set_cost(&phase1_cost);
    let mut iters = 0;
    match tab.run(&mut iters, max_iters, usize::MAX) {
        Step::Optimal => {}
        Step::Unbounded => unreachable!("phase 1 objective is bounded above by zero"),
        Step::IterationLimit => return LpSolution::failed(LpStatus::IterationLimit, iters),
    }
    tab.refresh_basic_values(&a, &b);
    let infeasibility: f64 = (0..m)
        .filter_map(|r| tab.basic_pos[n_real + r].map(|row| tab.xb[row]))
        .sum();
    let b_norm = b.iter().copied().fold(0.0, f64::max);
    if infeasibility > opts.feasibility_tol * (1.0 + b_norm) {
        return LpSolution::failed(LpStatus::Infeasible, iters);
    }

    // phase 2: artificials are pinned to zero and may not re-enter
    for r in 0..m {
        tab.upper[n_real + r] = 0.0;
        let col = n_real + r;
        if let Some(row) = tab.basic_pos[col] {
            tab.xb[row] = 0.0;
        }
    }
    let mut phase2_cost = vec![0.0; tab.ncols];
    phase2_cost[..n_real].copy_from_slice(&cost);
    tab.set_cost(&phase2_cost);
    match tab.run(&mut iters, max_iters, n_real) {
        Step::Optimal => {}
        Step::Unbounded => return LpSolution::failed(LpStatus::Unbounded, iters),
        Step::IterationLimit => return LpSolution::failed(LpStatus::IterationLimit, iters),
    }
    tab.refresh_basic_values(&a, &b);

    let internal = tab.values();
    let x: Vec<f64> = maps
        .iter()
        .enumerate()
        .map(|(k, map)| {
            let v = match *map {
                VarMap::Shifted { col, offset } => offset + internal[col],
                VarMap::Mirrored { col, offset } => offset - internal[col],
                VarMap::Split { pos, neg } => internal[pos] - internal[neg],
            };
            v.clamp(lp.lower[k], lp.upper[k])
        })
        .collect();
    // reduced cost of artificial r equals -y_r of the sign-adjusted row
    let duals = (0..m).map(|r| -tab.reduced[n_real + r] * sign[r]).collect();
    LpSolution {
        status: LpStatus::Optimal,
        objective_value: lp.evaluate(&x),
        x,
        duals,
        iterations: iters,
    }
}

/// Ratio-test values closer than this count as ties for Bland's rule.
const TIE_TOL: f64 = 1e-12;

enum Step {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Bounded-variable tableau `B^-1 [A | I]` with an explicit reduced-cost row.
struct Tableau {
    m: usize,
    ncols: usize,
    tol: f64,
    /// `m x ncols`, row-major.
    t: Vec<f64>,
    reduced: Vec<f64>,
    cost: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    /// Row holding each basic column.
    basic_pos: Vec<Option<usize>>,
    at_upper: Vec<bool>,
    xb: Vec<f64>,
}

impl Tableau {
    fn new(a: &Matrix, b: &[f64], mut upper: Vec<f64>, tol: f64) -> Self {
        let m = a.rows();
        let n_real = a.cols();
        let ncols = n_real + m;
        let mut t = vec![0.0; m * ncols];
        for r in 0..m {
            t[r * ncols..r * ncols + n_real].copy_from_slice(a.row(r));
            t[r * ncols + n_real + r] = 1.0;
        }
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut basic_pos = vec![None; ncols];
        for r in 0..m {
            basic_pos[n_real + r] = Some(r);
        }
        Tableau {
            m,
            ncols,
            tol,
            t,
            reduced: vec![0.0; ncols],
            cost: vec![0.0; ncols],
            upper,
            basis: (n_real..ncols).collect(),
            basic_pos,
            at_upper: vec![false; ncols],
            xb: b.to_vec(),
        }
    }

    fn set_cost(&mut self, cost: &[f64]) {
        self.cost = cost.to_vec();
        self.reduced = cost.to_vec();
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
                for (d, x) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * x;
                }
            }
        }
        for &j in &self.basis {
            self.reduced[j] = 0.0;
        }
    }

    /// Recomputes `x_B = B^-1 (b - sum_{j at upper} A_j u_j)` using the
    /// artificial block of the tableau, which holds `B^-1`.
    fn refresh_basic_values(&mut self, a: &Matrix, b: &[f64]) {
        let n_real = a.cols();
        let mut rhs = b.to_vec();
        for j in 0..n_real {
            if self.at_upper[j] && self.basic_pos[j].is_none() {
                let u = self.upper[j];
                for (r, v) in rhs.iter_mut().enumerate() {
                    *v -= a[(r, j)] * u;
                }
            }
        }
        for r in 0..self.m {
            let row = &self.t[r * self.ncols + n_real..(r + 1) * self.ncols];
            self.xb[r] = crate::matrix::dot(row, &rhs);
        }
    }

    fn values(&self) -> Vec<f64> {
        (0..self.ncols)
            .map(|j| match self.basic_pos[j] {
                Some(r) => self.xb[r].clamp(0.0, self.upper[j]),
                None if self.at_upper[j] => self.upper[j],
                None => 0.0,
            })
            .collect()
    }

    /// Runs Bland-rule iterations; columns `>= enter_limit` may not enter.
    fn run(&mut self, iters: &mut usize, max_iters: usize, enter_limit: usize) -> Step {
        let tol = self.tol;
        loop {
            let entering = (0..self.ncols.min(enter_limit)).find(|&j| {
                self.basic_pos[j].is_none()
                    && self.upper[j] > 0.0
                    && if self.at_upper[j] {
                        self.reduced[j] < -tol
                    } else {
                        self.reduced[j] > tol
                    }
            });
            let Some(j) = entering else {
                return Step::Optimal;
            };
            if *iters >= max_iters {
                return Step::IterationLimit;
            }
            *iters += 1;

            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };
            // (limit, row, leaves at upper)
            let mut best: Option<(f64, usize, bool)> = None;
            for r in 0..self.m {
                let alpha = dir * self.t[r * self.ncols + j];
                let bv = self.basis[r];
                let (limit, to_upper) = if alpha > tol {
                    (self.xb[r].max(0.0) / alpha, false)
                } else if alpha < -tol && self.upper[bv].is_finite() {
                    ((self.upper[bv] - self.xb[r]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let better = match best {
                    None => true,
                    Some((bl, br, _)) => {
                        limit < bl - TIE_TOL || (limit <= bl + TIE_TOL && bv < self.basis[br])
                    }
                };
                if better {
                    best = Some((limit, r, to_upper));
                }
            }
            let flip = self.upper[j];
            let step = match best {
                Some((limit, _, _)) if limit < flip => limit,
                _ if flip.is_finite() => flip,
                _ => return Step::Unbounded,
            };

            for r in 0..self.m {
                self.xb[r] -= dir * step * self.t[r * self.ncols + j];
            }
            match best {
                Some((limit, r, to_upper)) if limit < flip => {
                    let leaving = self.basis[r];
                    let entering_value = if self.at_upper[j] { self.upper[j] - step } else { step };
                    self.pivot(r, j);
                    self.xb[r] = entering_value;
                    self.basic_pos[leaving] = None;
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[j] = false;
                    self.basic_pos[j] = Some(r);
                    self.basis[r] = j;
                }
                _ => self.at_upper[j] = !self.at_upper[j],
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + j];
        for x in &mut self.t[r * nc..(r + 1) * nc] {
            *x /= piv;
        }
        let pivot_row = self.t[r * nc..(r + 1) * nc].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + j];
            if f != 0.0 {
                let row = &mut self.t[i * nc..(i + 1) * nc];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = self.reduced[j];
        if f != 0.0 {
            for (x, p) in self.reduced.iter_mut().zip(&pivot_row) {
                *x -= f * p;
            }
            self.reduced[j] = 0.0;
        }
    }
}
