//! Seeded synthetic corpora with planted outliers.
//!
//! Base features follow a log-normal distribution clipped at its 99th
//! percentile. Planted outliers have their features multiplied by
//! `outlier_magnitude`. Most planted outliers are not relevant but carry an
//! inflated utility estimate, so a utility sort pulls them toward the top.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::model::{Corpus, Group, Item, QueryInstance};

const BASE_FEATURE_MEDIAN: f64 = 10.0;
const BASE_FEATURE_SIGMA: f64 = 0.25;
/// Standard normal 0.99 quantile.
const Z_99: f64 = 2.326_347_874_040_841;

/// Upper clip of the base feature distribution (its 99th percentile).
pub fn base_feature_p99() -> f64 {
    BASE_FEATURE_MEDIAN * (Z_99 * BASE_FEATURE_SIGMA).exp()
}

/// Utility band given to planted outliers.
const OUTLIER_UTILITY: (f64, f64) = (0.75, 1.0);
/// Relevance band of non-relevant outliers.
const IRRELEVANT_RELEVANCE: (f64, f64) = (0.0, 0.2);
const MAX_FREQUENCY: u64 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub num_queries: usize,
    pub items_per_query: usize,
    pub outlier_fraction: f64,
    pub outlier_magnitude: f64,
    pub outlier_relevant_fraction: f64,
    pub group_balance: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_queries: 200,
            items_per_query: 20,
            outlier_fraction: 0.1,
            outlier_magnitude: 50.0,
            outlier_relevant_fraction: 0.1,
            group_balance: 0.5,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.num_queries < 1 {
            return Err("num_queries must be at least 1".into());
        }
        if self.items_per_query < 1 {
            return Err("items_per_query must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(format!("outlier_fraction {} not in [0, 1]", self.outlier_fraction));
        }
        if !(self.outlier_magnitude > 1.0 && self.outlier_magnitude.is_finite()) {
            return Err(format!("outlier_magnitude {} must exceed 1", self.outlier_magnitude));
        }
        if !(0.0..=1.0).contains(&self.outlier_relevant_fraction) {
            return Err(format!(
                "outlier_relevant_fraction {} not in [0, 1]",
                self.outlier_relevant_fraction
            ));
        }
        if !(self.group_balance > 0.0 && self.group_balance < 1.0) {
            return Err(format!("group_balance {} not in (0, 1)", self.group_balance));
        }
        Ok(())
    }

    /// Number of planted outliers per query, `ceil(fraction * N)`.
    pub fn outliers_per_query(&self) -> usize {
        let n = self.items_per_query;
        ((self.outlier_fraction * n as f64).ceil() as usize).min(n)
    }
}

/// Generates a corpus. Panics if the configuration is invalid; call
/// [`SyntheticConfig::validate`] first for untrusted input.
pub fn generate_synthetic(config: &SyntheticConfig) -> Corpus {
    if let Err(e) = config.validate() {
        panic!("invalid synthetic config: {e}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let base = LogNormal::new(BASE_FEATURE_MEDIAN.ln(), BASE_FEATURE_SIGMA).expect("valid log-normal");
    let clip = base_feature_p99();
    let n = config.items_per_query;
    let n_out = config.outliers_per_query();
    let width = config.num_queries.to_string().len().max(3);
    let item_width = n.to_string().len().max(2);

    let queries = (0..config.num_queries)
        .map(|qi| {
            let mut planted = vec![false; n];
            for i in sample(&mut rng, n, n_out) {
                planted[i] = true;
            }
            let items = planted
                .iter()
                .enumerate()
                .map(|(i, &is_outlier)| {
                    let feature = base.sample(&mut rng).min(clip);
                    let group = if rng.random::<f64>() < config.group_balance {
                        Group::Disadvantaged
                    } else {
                        Group::Privileged
                    };
                    let (utility, relevance, feature) = if is_outlier {
                        let utility = rng.random_range(OUTLIER_UTILITY.0..OUTLIER_UTILITY.1);
                        let relevant = rng.random::<f64>() < config.outlier_relevant_fraction;
                        let relevance = if relevant {
                            utility
                        } else {
                            rng.random_range(IRRELEVANT_RELEVANCE.0..IRRELEVANT_RELEVANCE.1)
                        };
                        (utility, relevance, feature * config.outlier_magnitude)
                    } else {
                        let utility = rng.random::<f64>();
                        (utility, utility, feature)
                    };
                    Item {
                        id: format!("d{:0item_width$}", i + 1),
                        utility,
                        relevance,
                        group,
                        features: vec![feature],
                    }
                })
                .collect();
            QueryInstance {
                qid: format!("q{:0width$}", qi + 1),
                frequency: rng.random_range(1..=MAX_FREQUENCY),
                items,
            }
        })
        .collect();
    Corpus { queries }
}
