//! Decomposes a matrix that only covers the top two positions of four items.

use omit_rank::bvn::{Orientation, PotentiallyDoublyStochastic};
use omit_rank::{decompose_rectangular, extend_to_doubly_stochastic, Matrix};

fn main() {
    // items by positions: each position is filled exactly once, each item
    // shown at most once
    let a = Matrix::from_rows(&[
        vec![0.5, 0.2],
        vec![0.3, 0.3],
        vec![0.2, 0.1],
        vec![0.0, 0.4],
    ]);
    let a = PotentiallyDoublyStochastic::new(a, Orientation::ColsSumOne).expect("valid input");

    let square = extend_to_doubly_stochastic(&a);
    println!("padded to {}x{}:", square.rows(), square.cols());
    for row in square.to_rows() {
        println!("  {row:?}");
    }

    let d = decompose_rectangular(&a).expect("decomposes");
    for t in &d.terms {
        println!("{:.3} x top two {:?}", t.weight, &t.ranking.order()[..2]);
    }
    let back = d.reconstruct_truncated(4, 2, Orientation::ColsSumOne);
    println!("reconstruction error {:.2e}", back.max_abs_diff(a.matrix()));
}
