//! The simplex solver on its own: a small production-planning program.

use omit_rank::lp::{solve, LinearProgram, LpStatus};

fn main() {
    // maximize 3x + 5y  s.t.  x <= 4,  2y <= 12,  3x + 2y <= 18
    let lp = LinearProgram::new(vec![3.0, 5.0]).with_inequalities(
        vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
        vec![4.0, 12.0, 18.0],
    );
    let sol = solve(&lp);
    assert_eq!(sol.status, LpStatus::Optimal);
    println!("x = {:?}, objective = {}", sol.x, sol.objective_value);
    println!("duals = {:?} after {} pivots", sol.duals, sol.iterations);

    // the same program with x + y = 10 forced on top has no solution
    let mut tight = lp.clone().with_bounds(vec![0.0, 0.0], vec![4.0, 6.0]);
    tight.add_equality(vec![1.0, 1.0], 11.0);
    println!("with x + y = 11: {:?}", solve(&tight).status);
}
