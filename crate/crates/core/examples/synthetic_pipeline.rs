//! Generates a synthetic corpus and compares every ranking method on it.
//!
//! `cargo run --release --example synthetic_pipeline [queries]`

use omit_rank::metrics::{delta_pct, EvalConfig};
use omit_rank::pipeline::evaluate_against_utility;
use omit_rank::{generate_synthetic, Method, RankConfig, SyntheticConfig};

fn main() {
    let queries = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let corpus = generate_synthetic(&SyntheticConfig {
        num_queries: queries,
        ..SyntheticConfig::default()
    });
    let eval = EvalConfig::default();

    println!("{:<10} {:>8} {:>8} {:>12} {:>14} {:>9}", "method", "ndcg@10", "dtr", "outliers@10", "outlierness@10", "fallback");
    for method in Method::ALL {
        let config = RankConfig { method, ..RankConfig::default() };
        let (report, baseline) = evaluate_against_utility(&corpus, &config, &eval).expect("pipeline runs");
        let m = report.aggregate_analytic;
        println!(
            "{:<10} {:>8.4} {:>8.4} {:>12.4} {:>14.4} {:>9.3}",
            method.name(),
            m.ndcg10,
            m.dtr.unwrap_or(f64::NAN),
            m.outliers,
            m.outlierness,
            report.fallback_rate,
        );
        if method == Method::OmitSoft {
            let cut = delta_pct(m.outliers, baseline.aggregate_analytic.outliers, false);
            println!("\nomit-soft shows {:.1}% fewer outliers in the top 10", cut.unwrap_or(0.0));
        }
    }
}
