//! Fair stochastic ranking with outlier mitigation.
//!
//! The pipeline takes a corpus of queries, flags items whose features stand
//! out from their ranked-list context, solves a linear program over
//! doubly stochastic item-by-position matrices that trades utility against
//! outliers shown near the top, and decomposes the result into a lottery
//! over concrete rankings that can be sampled and evaluated.

pub mod bvn;
pub mod cli;
pub mod error;
pub mod fair_rank;
pub mod lp;
pub mod matching;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod outlier;
pub mod pipeline;
pub mod sinkhorn;
pub mod synthetic;

pub use bvn::{decompose, decompose_rectangular, extend_to_doubly_stochastic, RankingDecomposition};
pub use error::{BvnError, CorpusError, DetectorError, FairRankError, MetricsError};
pub use fair_rank::{solve_foe, solve_omit, ConstraintMode, FairRankProblem, MarginalRankMatrix, Provenance};
pub use matrix::Matrix;
pub use metrics::{evaluate_query_sequence, MetricsReport, StochasticPolicy};
pub use model::{sort_by_utility, Corpus, Group, Item, QueryInstance, Ranking};
pub use outlier::{detect, DetectorConfig, DetectorMethod, OutlierVector};
pub use pipeline::{Method, RankConfig};
pub use synthetic::{generate_synthetic, SyntheticConfig};
