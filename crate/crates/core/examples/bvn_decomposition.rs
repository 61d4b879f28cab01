//! Turns a doubly stochastic matrix into a lottery over rankings, then
//! samples from it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use omit_rank::bvn::ZERO_TOL;
use omit_rank::metrics::sample_ranking;
use omit_rank::{decompose, Matrix, StochasticPolicy};

fn main() {
    let p = Matrix::from_rows(&[
        vec![0.5, 0.3, 0.2],
        vec![0.2, 0.5, 0.3],
        vec![0.3, 0.2, 0.5],
    ]);
    let d = decompose(&p, ZERO_TOL).expect("doubly stochastic input");
    for t in &d.terms {
        println!("{:.3} x {:?}", t.weight, t.ranking.order());
    }
    println!("reconstruction error {:.2e}", d.reconstruct().max_abs_diff(&p));

    let policy = StochasticPolicy::new("q", d);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut first = [0usize; 3];
    let draws = 10_000;
    for _ in 0..draws {
        first[sample_ranking(&policy, &mut rng).item_at(0)] += 1;
    }
    let freq: Vec<f64> = first.iter().map(|&c| c as f64 / draws as f64).collect();
    println!("top-position frequency {freq:?} (column 0 of P is [0.5, 0.2, 0.3])");
}
