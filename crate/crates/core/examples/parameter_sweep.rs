//! How the outlier cut-off changes NDCG and the outlierness reduction.

use omit_rank::metrics::EvalConfig;
use omit_rank::pipeline::{run_sweep, write_sweep_csv, SweepParam};
use omit_rank::{generate_synthetic, Method, RankConfig, SyntheticConfig};

fn main() {
    let corpus = generate_synthetic(&SyntheticConfig {
        num_queries: 30,
        ..SyntheticConfig::default()
    });
    let config = RankConfig {
        method: Method::OmitSoft,
        ..RankConfig::default()
    };
    let eval = EvalConfig {
        sequence_length: 2_000,
        ..EvalConfig::default()
    };
    let rows = run_sweep(&corpus, &config, &eval, SweepParam::TopK, &[3, 5, 10, 15]).expect("sweep runs");
    write_sweep_csv(std::io::stdout(), &rows).expect("stdout");
}
