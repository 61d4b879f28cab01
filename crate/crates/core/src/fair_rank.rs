//! Fair ranking linear programs over the Birkhoff polytope.
//!
//! The program maximizes expected utility minus the expected outlierness
//! placed in the top-k positions,
//!
//! ```text
//! max_P  u^T P v  -  lambda_o * o^T P h
//! s.t.   P 1 = 1,  1^T P = 1,  0 <= P <= 1,  f^T P v = 0
//! ```
//!
//! over the item-by-position matrix `P`. With `o = 0` it reduces to the plain
//! fairness-of-exposure program. In `Soft` mode the column sums become an L1
//! penalty and the solution is projected back onto doubly stochastic matrices
//! by Sinkhorn scaling.

use serde::{Deserialize, Serialize};

use crate::error::FairRankError;
use crate::lp::{self, LinearProgram, LpStatus};
use crate::matrix::Matrix;
use crate::model::{Group, Ranking};
use crate::outlier::OutlierVector;
use crate::sinkhorn::sinkhorn;

pub const SINKHORN_TOL: f64 = 1e-8;
pub const SINKHORN_MAX_ITERS: usize = 1000;
const SUPPORT_TOL: f64 = 1e-9;

/// Position-bias weights `v_j = 1 / log_b(1 + j)` for 1-based positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionVector {
    pub values: Vec<f64>,
    pub base: f64,
}

pub fn build_attention(n: usize, base: f64) -> AttentionVector {
    assert!(base > 1.0, "log base must exceed 1");
    let ln_b = base.ln();
    AttentionVector {
        values: (1..=n).map(|j| ln_b / ((1 + j) as f64).ln()).collect(),
        base,
    }
}

/// Indicator of the first `k` positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKMask {
    pub values: Vec<f64>,
    pub k: usize,
}

/// `k` is clamped to `n`.
pub fn top_k_mask(n: usize, k: usize) -> TopKMask {
    let k = k.min(n);
    TopKMask {
        values: (0..n).map(|j| if j < k { 1.0 } else { 0.0 }).collect(),
        k,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FairnessVariant {
    /// Group terms additionally divided by group size.
    GroupScaled,
    /// `f^T P v = 0` holds exactly when the disparate treatment ratio is one.
    #[default]
    DtrExact,
}

impl std::str::FromStr for FairnessVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dtr-exact" => Ok(FairnessVariant::DtrExact),
            "group-scaled" => Ok(FairnessVariant::GroupScaled),
            other => Err(format!("unknown fairness variant {other:?} (expected dtr-exact or group-scaled)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessVector {
    pub values: Vec<f64>,
    pub variant: FairnessVariant,
}

pub fn build_fairness_vector(
    utilities: &[f64],
    groups: &[Group],
    variant: FairnessVariant,
) -> Result<FairnessVector, FairRankError> {
    if utilities.len() != groups.len() {
        return Err(FairRankError::Dimension("utilities and groups differ in length".into()));
    }
    let mut size = [0usize; 2];
    let mut merit = [0.0f64; 2];
    for (&u, &g) in utilities.iter().zip(groups) {
        let idx = group_index(g);
        size[idx] += 1;
        merit[idx] += u;
    }
    for (idx, name) in [(0, "disadvantaged"), (1, "privileged")] {
        if size[idx] == 0 {
            return Err(FairRankError::FairnessUnavailable(format!("{name} group is empty")));
        }
        if merit[idx] <= 0.0 {
            return Err(FairRankError::FairnessUnavailable(format!("{name} group has zero utility")));
        }
    }
    let denom = |idx: usize| match variant {
        FairnessVariant::DtrExact => merit[idx],
        FairnessVariant::GroupScaled => size[idx] as f64 * merit[idx],
    };
    let values = groups
        .iter()
        .map(|&g| match g {
            Group::Disadvantaged => 1.0 / denom(0),
            Group::Privileged => -1.0 / denom(1),
        })
        .collect();
    Ok(FairnessVector { values, variant })
}

fn group_index(g: Group) -> usize {
    match g {
        Group::Disadvantaged => 0,
        Group::Privileged => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairRankProblem {
    pub utilities: Vec<f64>,
    pub attention: AttentionVector,
    /// Outlier scores `o`; all zeros for plain fairness of exposure.
    pub outliers: Vec<f64>,
    pub top_k: TopKMask,
    pub fairness: Option<FairnessVector>,
    pub mode: ConstraintMode,
    pub lambda_o: f64,
    pub lambda_s: f64,
}

impl FairRankProblem {
    /// Problem with no outlier term, no fairness constraint, Hard mode, log2 attention.
    pub fn new(utilities: Vec<f64>) -> Self {
        let n = utilities.len();
        FairRankProblem {
            utilities,
            attention: build_attention(n, 2.0),
            outliers: vec![0.0; n],
            top_k: top_k_mask(n, n),
            fairness: None,
            mode: ConstraintMode::Hard,
            lambda_o: 1.0,
            lambda_s: 10.0,
        }
    }

    pub fn with_outliers(mut self, o: &OutlierVector, k: usize) -> Self {
        self.outliers = o.scores.clone();
        self.top_k = top_k_mask(self.utilities.len(), k);
        self
    }

    pub fn with_fairness(mut self, f: FairnessVector) -> Self {
        self.fairness = Some(f);
        self
    }

    pub fn with_mode(mut self, mode: ConstraintMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn len(&self) -> usize {
        self.utilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utilities.is_empty()
    }

    pub fn validate(&self) -> Result<(), FairRankError> {
        let n = self.len();
        let dim = |what: &str, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(FairRankError::Dimension(format!("{what} has length {len}, expected {n}")))
            }
        };
        if n == 0 {
            return Err(FairRankError::Dimension("empty problem".into()));
        }
        dim("attention", self.attention.values.len())?;
        dim("outliers", self.outliers.len())?;
        dim("top-k mask", self.top_k.values.len())?;
        if let Some(f) = &self.fairness {
            dim("fairness vector", f.values.len())?;
        }
        if !(self.lambda_o >= 0.0 && self.lambda_s >= 0.0) {
            return Err(FairRankError::Dimension("lambda weights must be non-negative".into()));
        }
        Ok(())
    }

    /// Coefficient of `P[i][j]` in the objective.
    fn coefficient(&self, i: usize, j: usize) -> f64 {
        self.utilities[i] * self.attention.values[j]
            - self.lambda_o * self.outliers[i] * self.top_k.values[j]
    }

    /// `u^T P v - lambda_o o^T P h` for any item-by-position matrix.
    pub fn objective(&self, p: &Matrix) -> f64 {
        p.bilinear(&self.utilities, &self.attention.values)
            - self.lambda_o * p.bilinear(&self.outliers, &self.top_k.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Solved,
    FallbackInitial,
}

/// Item-by-position probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRankMatrix {
    pub p: Matrix,
    pub provenance: Provenance,
    /// Optimal value of the solved program (including slack penalties in Soft mode).
    pub lp_objective: Option<f64>,
}

impl MarginalRankMatrix {
    pub fn is_fallback(&self) -> bool {
        self.provenance == Provenance::FallbackInitial
    }

    fn fallback(initial: &Ranking) -> Self {
        MarginalRankMatrix {
            p: initial.to_matrix(),
            provenance: Provenance::FallbackInitial,
            lp_objective: None,
        }
    }
}

/// Variables are `vec(P)` row-major (`i * N + j`), followed in Soft mode by
/// `N` surplus and `N` deficit slacks for the column sums.
pub fn assemble_lp(problem: &FairRankProblem) -> LinearProgram {
    let n = problem.len();
    let nn = n * n;
    let soft = problem.mode == ConstraintMode::Soft;
    let nvars = if soft { nn + 2 * n } else { nn };

    let mut objective = vec![0.0; nvars];
    for i in 0..n {
        for j in 0..n {
            objective[i * n + j] = problem.coefficient(i, j);
        }
    }
    if soft {
        objective[nn..].iter_mut().for_each(|c| *c = -problem.lambda_s);
    }

    let mut rows = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        let mut row = vec![0.0; nvars];
        row[i * n..(i + 1) * n].iter_mut().for_each(|x| *x = 1.0);
        rows.push(row);
    }
    for j in 0..n {
        let mut row = vec![0.0; nvars];
        for i in 0..n {
            row[i * n + j] = 1.0;
        }
        if soft {
            row[nn + j] = -1.0;
            row[nn + n + j] = 1.0;
        }
        rows.push(row);
    }
    let mut rhs = vec![1.0; 2 * n];
    if let Some(f) = &problem.fairness {
        let mut row = vec![0.0; nvars];
        for i in 0..n {
            for j in 0..n {
                row[i * n + j] = f.values[i] * problem.attention.values[j];
            }
        }
        rows.push(row);
        rhs.push(0.0);
    }

    let mut lower = vec![0.0; nvars];
    let mut upper = vec![1.0; nvars];
    if soft {
        upper[nn..].iter_mut().for_each(|u| *u = f64::INFINITY);
        lower[nn..].iter_mut().for_each(|l| *l = 0.0);
    }
    LinearProgram::new(objective)
        .with_equalities(rows, rhs)
        .with_bounds(lower, upper)
}

/// Solves the outlier-aware program. Infeasible or non-terminating solves
/// fall back to the permutation matrix of `initial`.
pub fn solve_omit(problem: &FairRankProblem, initial: &Ranking) -> Result<MarginalRankMatrix, FairRankError> {
    problem.validate()?;
    let n = problem.len();
    if initial.len() != n {
        return Err(FairRankError::Dimension(format!(
            "initial ranking has {} positions for {n} items",
            initial.len()
        )));
    }
    let lp = assemble_lp(problem);
    let sol = lp::solve(&lp);
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => return Err(FairRankError::Unbounded),
        LpStatus::Infeasible | LpStatus::IterationLimit => {
            log::debug!("ranking program {:?}; returning the initial ranking", sol.status);
            return Ok(MarginalRankMatrix::fallback(initial));
        }
    }
    let mut p = Matrix::from_vec(n, n, sol.x[..n * n].to_vec());
    for i in 0..n {
        for x in p.row_mut(i) {
            *x = if *x <= SUPPORT_TOL { 0.0 } else { x.min(1.0) };
        }
    }
    if problem.mode == ConstraintMode::Soft {
        let projected = sinkhorn(&p, SINKHORN_TOL, SINKHORN_MAX_ITERS);
        if !projected.converged {
            log::debug!(
                "sinkhorn projection stalled at residual {:e}; returning the initial ranking",
                projected.residual
            );
            return Ok(MarginalRankMatrix::fallback(initial));
        }
        p = projected.matrix;
    }
    Ok(MarginalRankMatrix {
        p,
        provenance: Provenance::Solved,
        lp_objective: Some(sol.objective_value),
    })
}

/// Plain fairness of exposure: [`solve_omit`] with the outlier term removed.
pub fn solve_foe(
    utilities: &[f64],
    attention: &AttentionVector,
    fairness: Option<&FairnessVector>,
    mode: ConstraintMode,
    initial: &Ranking,
) -> Result<MarginalRankMatrix, FairRankError> {
    let n = utilities.len();
    let problem = FairRankProblem {
        utilities: utilities.to_vec(),
        attention: attention.clone(),
        outliers: vec![0.0; n],
        top_k: top_k_mask(n, n),
        fairness: fairness.cloned(),
        mode,
        lambda_o: 0.0,
        lambda_s: 10.0,
    };
    solve_omit(&problem, initial)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalOutcome {
    pub ranking: Ranking,
    /// Every item was flagged, so nothing could be removed.
    pub all_flagged: bool,
}

/// Moves flagged items behind all unflagged ones, keeping relative order
/// within both parts.
pub fn remove_outliers_baseline(initial: &Ranking, outliers: &OutlierVector) -> RemovalOutcome {
    let flagged = |i: usize| outliers.binary[i] == 1;
    if initial.order().iter().all(|&i| flagged(i)) {
        log::warn!("all items flagged as outliers; keeping the initial ranking");
        return RemovalOutcome {
            ranking: initial.clone(),
            all_flagged: true,
        };
    }
    let (kept, removed): (Vec<usize>, Vec<usize>) = initial.order().iter().partition(|&&i| !flagged(i));
    RemovalOutcome {
        ranking: Ranking::new([kept, removed].concat()).expect("partition of a permutation"),
        all_flagged: false,
    }
}
