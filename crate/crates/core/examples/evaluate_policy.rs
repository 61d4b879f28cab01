//! Analytic and sampled metrics of a stochastic policy over a query stream.

use std::collections::HashMap;

use omit_rank::bvn::DecompositionTerm;
use omit_rank::metrics::{EvalConfig, Estimate};
use omit_rank::{
    evaluate_query_sequence, Corpus, Group, Item, OutlierVector, QueryInstance, Ranking, RankingDecomposition,
    StochasticPolicy,
};

fn main() {
    let items = vec![
        Item::new("a", 0.9, Group::Privileged, vec![1.0]).with_relevance(1.0),
        Item::new("b", 0.8, Group::Disadvantaged, vec![9.0]).with_relevance(0.0),
        Item::new("c", 0.6, Group::Disadvantaged, vec![1.1]).with_relevance(1.0),
        Item::new("d", 0.3, Group::Privileged, vec![0.9]).with_relevance(0.0),
    ];
    let corpus = Corpus::new(vec![QueryInstance::new("q1", 3, items).unwrap()]).unwrap();

    // show the outlier "b" first or third with equal probability
    let term = |w: f64, order: Vec<usize>| DecompositionTerm {
        weight: w,
        ranking: Ranking::new(order).unwrap(),
    };
    let decomposition = RankingDecomposition {
        terms: vec![term(0.5, vec![1, 0, 2, 3]), term(0.5, vec![0, 2, 1, 3])],
        residual: 0.0,
    };
    let policies = HashMap::from([("q1".to_string(), StochasticPolicy::new("q1", decomposition))]);
    let outliers = HashMap::from([("q1".to_string(), OutlierVector::from_scores(vec![0.0, 1.0, 0.0, 0.0]))]);

    let config = EvalConfig {
        method: "mixed".into(),
        sequence_length: 5_000,
        top_k: 2,
        ..EvalConfig::default()
    };
    let report = evaluate_query_sequence(&corpus, &policies, &outliers, &config).expect("evaluates");
    let row = report.row("q1").unwrap();
    println!("impressions {}", row.impressions);
    println!("analytic  {:?}", row.analytic);
    println!("empirical {:?}", row.empirical);
    println!("std error {:?}", row.std_error);

    report
        .write_csv(std::io::stdout(), Estimate::Analytic, None)
        .expect("stdout");
}
