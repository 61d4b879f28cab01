//! Birkhoff–von Neumann decomposition into executable rankings.
//!
//! [`decompose`] peels permutation matrices off a doubly stochastic matrix:
//! find a perfect matching on the support, subtract it weighted by its
//! smallest entry, repeat. Every step zeroes at least one entry, and the
//! result has at most `(N-1)^2 + 1` terms.
//!
//! Rectangular "potentially doubly stochastic" matrices (lines along one axis
//! sum to one, along the other to at most one) are handled by
//! [`decompose_rectangular`]. Each short-side line is matched to a distinct
//! long-side line, and the long-side lines left over absorb their remaining
//! mass through a single remainder column. If that extraction ever stalls
//! numerically the matrix is padded to a full square doubly stochastic one
//! with [`extend_to_doubly_stochastic`] and decomposed directly.

use serde::{Deserialize, Serialize};

use crate::error::BvnError;
use crate::matching::perfect_matching;
use crate::matrix::Matrix;
use crate::model::Ranking;

/// Default threshold below which entries count as zero.
pub const ZERO_TOL: f64 = 1e-9;
/// Leftover mass per line that is accepted as numerical noise.
pub const MASS_TOL: f64 = 1e-6;
const LINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTerm {
    pub weight: f64,
    pub ranking: Ranking,
}

/// Convex combination of rankings: a stochastic ranking policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDecomposition {
    pub terms: Vec<DecompositionTerm>,
    /// Mass that was not assigned to any term, `1 - sum(weights)`.
    pub residual: f64,
}

impl RankingDecomposition {
    /// Deterministic policy with a single ranking.
    pub fn single(ranking: Ranking) -> Self {
        RankingDecomposition {
            terms: vec![DecompositionTerm {
                weight: 1.0,
                ranking,
            }],
            residual: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of items (= positions) of the rankings.
    pub fn size(&self) -> usize {
        self.terms.first().map_or(0, |t| t.ranking.len())
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn is_deterministic(&self) -> bool {
        self.terms.len() == 1
    }

    /// `sum_l theta_l P_{sigma_l}`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.size();
        let mut m = Matrix::zeros(n, n);
        for t in &self.terms {
            for (pos, &item) in t.ranking.order().iter().enumerate() {
                m[(item, pos)] += t.weight;
            }
        }
        m
    }

    /// Reconstructs a rectangular matrix from truncated permutations, as
    /// produced by [`decompose_rectangular`] for an input of shape
    /// `rows x cols` with the given orientation.
    pub fn reconstruct_truncated(&self, rows: usize, cols: usize, orientation: Orientation) -> Matrix {
        let short = rows.min(cols);
        let mut m = Matrix::zeros(rows, cols);
        for t in &self.terms {
            for (s, &long) in t.ranking.order()[..short].iter().enumerate() {
                match orientation {
                    Orientation::ColsSumOne => m[(long, s)] += t.weight,
                    Orientation::RowsSumOne => m[(s, long)] += t.weight,
                }
            }
        }
        m
    }

    /// Merges terms with identical rankings, keeping first-seen order.
    fn merge_duplicates(&mut self) {
        let mut merged: Vec<DecompositionTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.iter_mut().find(|m| m.ranking == t.ranking) {
                Some(m) => m.weight += t.weight,
                None => merged.push(t),
            }
        }
        self.terms = merged;
    }

    fn finish(mut self) -> Self {
        let total = self.weight_sum();
        if total > 1.0 {
            for t in &mut self.terms {
                t.weight /= total;
            }
        }
        self.residual = (1.0 - self.weight_sum()).max(0.0);
        self
    }
}

fn check_square_input(p: &Matrix) -> Result<(), BvnError> {
    if !p.is_square() {
        return Err(BvnError::InvalidInput(format!("{}x{} matrix is not square", p.rows(), p.cols())));
    }
    if p.as_slice().iter().any(|x| !x.is_finite() || *x < -MASS_TOL || *x > 1.0 + MASS_TOL) {
        return Err(BvnError::InvalidInput("entries must lie in [0, 1]".into()));
    }
    let dev = p.max_line_deviation();
    if dev > MASS_TOL {
        return Err(BvnError::NoPerfectMatching { max_deviation: dev });
    }
    Ok(())
}

/// Decomposes a doubly stochastic matrix (rows = items, columns = positions).
pub fn decompose(p: &Matrix, zero_tol: f64) -> Result<RankingDecomposition, BvnError> {
    check_square_input(p)?;
    let n = p.rows();
    let deviation = p.max_line_deviation();
    let mut w = p.clone();
    for i in 0..n {
        for x in w.row_mut(i) {
            if *x <= zero_tol {
                *x = 0.0;
            }
        }
    }

    let mut terms = Vec::new();
    let max_terms = n * n + 1;
    loop {
        let remaining = w.row_sums().into_iter().fold(0.0, f64::max);
        if remaining <= zero_tol {
            break;
        }
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| w[(i, j)] > zero_tol).collect())
            .collect();
        let Some(mate) = perfect_matching(&adj) else {
            if remaining <= MASS_TOL {
                break;
            }
            return Err(BvnError::NoPerfectMatching {
                max_deviation: deviation.max(remaining),
            });
        };
        let theta = (0..n).map(|i| w[(i, mate[i])]).fold(f64::INFINITY, f64::min);
        let mut order = vec![0; n];
        for (i, &j) in mate.iter().enumerate() {
            order[j] = i;
            let x = &mut w[(i, j)];
            *x -= theta;
            if *x <= zero_tol {
                *x = 0.0;
            }
        }
        terms.push(DecompositionTerm {
            weight: theta,
            ranking: Ranking::new(order).expect("matching yields a permutation"),
        });
        if terms.len() > max_terms {
            return Err(BvnError::NoPerfectMatching {
                max_deviation: deviation,
            });
        }
    }
    Ok(RankingDecomposition {
        terms,
        residual: 0.0,
    }
    .finish())
}

/// Which lines of a rectangular matrix sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    RowsSumOne,
    ColsSumOne,
}

/// Matrix with entries in `[0, 1]` whose lines along `orientation` sum to
/// one and whose cross lines sum to at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentiallyDoublyStochastic {
    matrix: Matrix,
    orientation: Orientation,
}

impl PotentiallyDoublyStochastic {
    pub fn new(matrix: Matrix, orientation: Orientation) -> Result<Self, BvnError> {
        if matrix.as_slice().iter().any(|&x| !(-LINE_TOL..=1.0 + LINE_TOL).contains(&x)) {
            return Err(BvnError::InvalidInput("entries must lie in [0, 1]".into()));
        }
        let (full, cross) = match orientation {
            Orientation::RowsSumOne => (matrix.row_sums(), matrix.col_sums()),
            Orientation::ColsSumOne => (matrix.col_sums(), matrix.row_sums()),
        };
        if let Some(s) = full.iter().find(|s| (*s - 1.0).abs() > LINE_TOL) {
            return Err(BvnError::InvalidInput(format!("line sums to {s}, expected 1")));
        }
        if let Some(s) = cross.iter().find(|&&s| s > 1.0 + LINE_TOL) {
            return Err(BvnError::InvalidInput(format!("cross line sums to {s}, exceeds 1")));
        }
        Ok(PotentiallyDoublyStochastic {
            matrix,
            orientation,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// View with long side as rows and columns summing to one.
    fn tall(&self) -> Matrix {
        match self.orientation {
            Orientation::ColsSumOne => self.matrix.clone(),
            Orientation::RowsSumOne => self.matrix.transpose(),
        }
    }
}

/// Pads the short side with equal shares of each long line's missing mass,
/// giving an `n x n` doubly stochastic matrix that contains the input as its
/// leading block. Square input is returned unchanged.
pub fn extend_to_doubly_stochastic(a: &PotentiallyDoublyStochastic) -> Matrix {
    if a.matrix.is_square() {
        return a.matrix.clone();
    }
    let tall = a.tall();
    let (n, k) = (tall.rows(), tall.cols());
    let mut ext = Matrix::zeros(n, n);
    for i in 0..n {
        let row = tall.row(i);
        let fill = (1.0 - row.iter().sum::<f64>()) / (n - k) as f64;
        let out = ext.row_mut(i);
        out[..k].copy_from_slice(row);
        out[k..].iter_mut().for_each(|x| *x = fill);
    }
    match a.orientation {
        Orientation::ColsSumOne => ext,
        Orientation::RowsSumOne => ext.transpose(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RectangularStrategy {
    /// Single remainder column, falling back to full extension on a stall.
    #[default]
    SingleRemainder,
    /// Always pad to a square matrix first.
    FullExtension,
}

/// Decomposes a potentially doubly stochastic matrix into truncated
/// permutations. Each term's ranking is a permutation of the long side whose
/// first `min(rows, cols)` entries give the long-side line matched to each
/// short-side line.
pub fn decompose_rectangular(a: &PotentiallyDoublyStochastic) -> Result<RankingDecomposition, BvnError> {
    decompose_rectangular_with(a, RectangularStrategy::default())
}

pub fn decompose_rectangular_with(
    a: &PotentiallyDoublyStochastic,
    strategy: RectangularStrategy,
) -> Result<RankingDecomposition, BvnError> {
    if a.matrix.is_square() {
        return decompose(&a.matrix, ZERO_TOL);
    }
    if strategy == RectangularStrategy::SingleRemainder {
        if let Some(dec) = single_remainder(&a.tall()) {
            return Ok(dec);
        }
        log::debug!("single-remainder extraction stalled; padding to square");
    }
    let square = match a.orientation {
        Orientation::ColsSumOne => extend_to_doubly_stochastic(a),
        Orientation::RowsSumOne => extend_to_doubly_stochastic(a).transpose(),
    };
    let k = a.matrix.rows().min(a.matrix.cols());
    let mut dec = decompose(&square, ZERO_TOL)?;
    for t in &mut dec.terms {
        t.ranking = canonical_tail(&t.ranking.order()[..k], square.rows());
    }
    dec.merge_duplicates();
    Ok(dec)
}

/// Permutation of `0..n` starting with `head`, unused indices following in
/// ascending order.
fn canonical_tail(head: &[usize], n: usize) -> Ranking {
    let mut used = vec![false; n];
    let mut out = head.to_vec();
    for &i in &out {
        used[i] = true;
    }
    out.extend((0..n).filter(|&i| !used[i]));
    Ranking::new(out).expect("valid permutation")
}

/// Extraction on `[tall | r]` with `r_i = 1 - rowsum_i` shared by the
/// `n - k` unmatched rows. `None` signals a numerical stall.
fn single_remainder(tall: &Matrix) -> Option<RankingDecomposition> {
    let (n, k) = (tall.rows(), tall.cols());
    let mut w = tall.clone();
    let mut rem: Vec<f64> = w.row_sums().iter().map(|s| (1.0 - s).max(0.0)).collect();
    for i in 0..n {
        for x in w.row_mut(i) {
            if *x <= ZERO_TOL {
                *x = 0.0;
            }
        }
        if rem[i] <= ZERO_TOL {
            rem[i] = 0.0;
        }
    }
    let mut terms = Vec::new();
    let max_terms = n * n + 1;
    loop {
        let remaining = w.col_sums().into_iter().fold(0.0, f64::max);
        if remaining <= ZERO_TOL {
            break;
        }
        // right vertices: k real columns, then n - k copies of the remainder
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut v: Vec<usize> = (0..k).filter(|&j| w[(i, j)] > ZERO_TOL).collect();
                if rem[i] > ZERO_TOL {
                    v.extend(k..n);
                }
                v
            })
            .collect();
        let Some(mate) = perfect_matching(&adj) else {
            if remaining <= MASS_TOL {
                break;
            }
            return None;
        };
        let theta = mate
            .iter()
            .enumerate()
            .map(|(i, &j)| if j < k { w[(i, j)] } else { rem[i] })
            .fold(f64::INFINITY, f64::min);
        let mut head = vec![0; k];
        for (i, &j) in mate.iter().enumerate() {
            let x = if j < k {
                head[j] = i;
                &mut w[(i, j)]
            } else {
                &mut rem[i]
            };
            *x -= theta;
            if *x <= ZERO_TOL {
                *x = 0.0;
            }
        }
        terms.push(DecompositionTerm {
            weight: theta,
            ranking: canonical_tail(&head, n),
        });
        if terms.len() > max_terms {
            return None;
        }
    }
    let mut dec = RankingDecomposition {
        terms,
        residual: 0.0,
    };
    dec.merge_duplicates();
    Some(dec.finish())
}
