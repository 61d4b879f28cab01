//! Utility ranking versus fairness of exposure versus outlier mitigation on
//! one six-item query.

use omit_rank::fair_rank::{build_attention, build_fairness_vector, FairnessVariant};
use omit_rank::metrics::{dtr, expected_utility, outlierness_at_k};
use omit_rank::{solve_foe, solve_omit, ConstraintMode, FairRankProblem, Group, Matrix, OutlierVector, Ranking};

fn show(name: &str, p: &Matrix, u: &[f64], groups: &[Group], o: &[f64]) {
    let v = build_attention(u.len(), 2.0).values;
    let h = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
    println!(
        "{name:<8} utility {:.4}  dTR {:.4}  outlierness@3 {:.4}",
        expected_utility(u, p, &v),
        dtr(p, u, groups, &v).unwrap_or(f64::NAN),
        outlierness_at_k(p, o, &h),
    );
}

fn main() {
    let u = vec![0.95, 0.9, 0.8, 0.6, 0.5, 0.4];
    let groups = [
        Group::Privileged,
        Group::Privileged,
        Group::Privileged,
        Group::Disadvantaged,
        Group::Disadvantaged,
        Group::Disadvantaged,
    ];
    // the second item is a strong outlier
    let o = OutlierVector::from_scores(vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let initial = Ranking::identity(u.len());
    let f = build_fairness_vector(&u, &groups, FairnessVariant::DtrExact).expect("both groups present");
    let v = build_attention(u.len(), 2.0);

    show("utility", &initial.to_matrix(), &u, &groups, &o.scores);

    let foe = solve_foe(&u, &v, Some(&f), ConstraintMode::Hard, &initial).expect("solves");
    show("foe", &foe.p, &u, &groups, &o.scores);

    let problem = FairRankProblem::new(u.clone())
        .with_outliers(&o, 3)
        .with_fairness(f)
        .with_mode(ConstraintMode::Soft);
    let omit = solve_omit(&problem, &initial).expect("solves");
    show("omit", &omit.p, &u, &groups, &o.scores);

    println!("\nomit marginals ({:?}):", omit.provenance);
    for row in omit.p.to_rows() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.3}")).collect();
        println!("  {}", cells.join(" "));
    }
}
