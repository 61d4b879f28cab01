//! Independent oracles and random instance builders shared by the
//! integration tests.
#![allow(dead_code)]

use omit_rank::matrix::Matrix;
use omit_rank::sinkhorn::sinkhorn;
use rand::seq::SliceRandom;
use rand::Rng;

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Best value of `sum_j score(order[j], j)` over all orders, where
/// `order[j]` is the item placed at position `j`.
pub fn best_assignment(n: usize, score: impl Fn(usize, usize) -> f64) -> f64 {
    permutations(n)
        .iter()
        .map(|order| order.iter().enumerate().map(|(j, &i)| score(i, j)).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `1 / log2(1 + j)` for 1-based `j`, written out independently of the
/// library.
pub fn log2_attention(n: usize) -> Vec<f64> {
    (1..=n).map(|j| 1.0 / (1.0 + j as f64).log2()).collect()
}

/// Doubly stochastic matrix from Sinkhorn-scaling a random nonnegative
/// matrix. With `sparse` the support is the union of a few random
/// permutations (so it has total support); otherwise every entry is
/// positive with magnitudes spread over two orders.
pub fn random_doubly_stochastic<R: Rng>(n: usize, sparse: bool, rng: &mut R) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    if sparse {
        for _ in 0..rng.random_range(1..=n.max(2)) {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            for (i, &j) in perm.iter().enumerate() {
                m[(i, j)] += rng.random_range(0.1..1.0);
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = (rng.random_range(-4.6..0.0f64)).exp();
            }
        }
    }
    let r = sinkhorn(&m, 1e-13, 100_000);
    assert!(r.converged, "sinkhorn failed on a matrix with total support");
    r.matrix
}
