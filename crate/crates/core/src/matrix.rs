//! Minimal dense row-major matrix used throughout the crate.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Uniform doubly stochastic matrix, every entry `1/n`.
    pub fn uniform(n: usize) -> Self {
        Matrix {
            rows: n,
            cols: n,
            data: vec![1.0 / n as f64; n * n],
        }
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    /// Permutation matrix with `P[order[j], j] = 1`: item `order[j]` sits at position `j`.
    pub fn permutation(order: &[usize]) -> Self {
        let n = order.len();
        let mut m = Matrix::zeros(n, n);
        for (pos, &item) in order.iter().enumerate() {
            m[(item, pos)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, x) in sums.iter_mut().zip(self.row(i)) {
                *s += x;
            }
        }
        sums
    }

    /// Largest absolute deviation of any row or column sum from one.
    pub fn max_line_deviation(&self) -> f64 {
        self.row_sums()
            .into_iter()
            .chain(self.col_sums())
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `true` when entries lie in `[-tol, 1 + tol]` and every line sums to one within `tol`.
    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.is_square()
            && self.data.iter().all(|&x| x >= -tol && x <= 1.0 + tol)
            && self.max_line_deviation() <= tol
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `x^T M y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        x.iter()
            .enumerate()
            .map(|(i, xi)| xi * dot(self.row(i), y))
            .sum()
    }

    /// `M y`.
    pub fn mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), y)).collect()
    }

    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_places_item_at_position() {
        let p = Matrix::permutation(&[2, 0, 1]);
        assert_eq!(p[(2, 0)], 1.0);
        assert_eq!(p[(0, 1)], 1.0);
        assert_eq!(p[(1, 2)], 1.0);
        assert!(p.is_doubly_stochastic(0.0));
    }

    #[test]
    fn bilinear_matches_manual_sum() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        // [1, 2] * M * [1, 1] = 1*3 + 2*7
        assert_eq!(m.bilinear(&[1.0, 2.0], &[1.0, 1.0]), 17.0);
    }
}
