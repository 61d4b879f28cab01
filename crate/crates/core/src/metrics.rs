//! Evaluation of stochastic ranking policies.
//!
//! Every metric except NDCG is linear in the marginal rank matrix, so its
//! expectation is computed straight from `P`. Expected NDCG goes through the
//! decomposition terms. Empirical values come from sampling rankings along a
//! query stream.

use std::collections::HashMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvn::RankingDecomposition;
use crate::error::MetricsError;
use crate::fair_rank::{build_attention, top_k_mask};
use crate::matrix::Matrix;
use crate::model::{Corpus, Group, QueryInstance, Ranking};
use crate::outlier::OutlierVector;

pub const DEFAULT_SEQUENCE_LENGTH: usize = 10_000;

/// Expected attention per item, `P v`.
pub fn exposure(p: &Matrix, v: &[f64]) -> Vec<f64> {
    p.mul_vec(v)
}

/// `u^T P v`.
pub fn expected_utility(u: &[f64], p: &Matrix, v: &[f64]) -> f64 {
    p.bilinear(u, v)
}

/// Exposure per unit of merit of the disadvantaged group divided by that of
/// the privileged group. `None` when a group is empty or has no merit.
pub fn dtr(p: &Matrix, u: &[f64], groups: &[Group], v: &[f64]) -> Option<f64> {
    let (a, b) = group_exposure_rates(&exposure(p, v), u, groups)?;
    (b > 0.0).then(|| a / b)
}

/// Per-group exposure divided by per-group merit, `(dis, priv)`.
fn group_exposure_rates(exposure: &[f64], u: &[f64], groups: &[Group]) -> Option<(f64, f64)> {
    let mut exp = [0.0; 2];
    let mut merit = [0.0; 2];
    for ((&e, &ui), &g) in exposure.iter().zip(u).zip(groups) {
        let idx = usize::from(g == Group::Privileged);
        exp[idx] += e;
        merit[idx] += ui;
    }
    (merit[0] > 0.0 && merit[1] > 0.0).then(|| (exp[0] / merit[0], exp[1] / merit[1]))
}

/// NDCG@k with linear gain and log2 discount. `k` is clamped to the ranking
/// length; all-zero relevance scores 1.
pub fn ndcg_at_k(ranking: &Ranking, relevance: &[f64], k: usize) -> f64 {
    let k = k.min(ranking.len());
    let discount = |j: usize| 1.0 / ((j + 2) as f64).log2();
    let dcg: f64 = (0..k).map(|j| relevance[ranking.item_at(j)] * discount(j)).sum();
    let mut ideal = relevance.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(j, r)| r * discount(j)).sum();
    if idcg <= 0.0 {
        1.0
    } else {
        dcg / idcg
    }
}

/// Expected outlierness in the positions selected by `h`, `o^T P h`.
pub fn outlierness_at_k(p: &Matrix, o: &[f64], h: &[f64]) -> f64 {
    p.bilinear(o, h)
}

/// Expected number of outliers in the positions selected by `h`. Any
/// positive entry of `o` counts as one outlier.
pub fn outlier_count_at_k(p: &Matrix, o: &[f64], h: &[f64]) -> f64 {
    let ob: Vec<f64> = o.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
    p.bilinear(&ob, h)
}

/// Outlierness placed in the top positions by a single ranking.
pub fn ranking_outlierness(sigma: &Ranking, o: &[f64], h: &[f64]) -> f64 {
    sigma
        .order()
        .iter()
        .zip(h)
        .map(|(&item, &hj)| o[item] * hj)
        .sum()
}

/// A decomposition bound to its query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticPolicy {
    pub qid: String,
    pub decomposition: RankingDecomposition,
    /// The optimizer gave up and the policy is the initial ranking.
    #[serde(default)]
    pub fallback: bool,
}

impl StochasticPolicy {
    pub fn new(qid: impl Into<String>, decomposition: RankingDecomposition) -> Self {
        StochasticPolicy {
            qid: qid.into(),
            decomposition,
            fallback: false,
        }
    }

    /// Term weights rescaled to sum to one.
    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.decomposition.weight_sum();
        self.decomposition.terms.iter().map(|t| t.weight / total).collect()
    }

    /// Marginal rank matrix of the normalized policy.
    pub fn marginals(&self) -> Matrix {
        let mut p = self.decomposition.reconstruct();
        let total = self.decomposition.weight_sum();
        let n = p.rows();
        for i in 0..n {
            p.row_mut(i).iter_mut().for_each(|x| *x /= total);
        }
        p
    }
}

/// Draws a ranking with probability proportional to its term weight.
pub fn sample_ranking<'a, R: Rng + ?Sized>(policy: &'a StochasticPolicy, rng: &mut R) -> &'a Ranking {
    let terms = &policy.decomposition.terms;
    let total = policy.decomposition.weight_sum();
    let mut r = rng.random::<f64>() * total;
    for t in terms {
        if r < t.weight {
            return &t.ranking;
        }
        r -= t.weight;
    }
    // rounding can leave r just above the last cumulative weight
    &terms.last().expect("policy has at least one term").ranking
}

/// The five reported quantities for one query.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub ndcg5: f64,
    pub ndcg10: f64,
    pub dtr: Option<f64>,
    pub outliers: f64,
    pub outlierness: f64,
}

/// Inputs shared by the analytic and sampled evaluations of one query.
#[derive(Debug, Clone)]
pub struct QueryContext<'a> {
    pub instance: &'a QueryInstance,
    pub outliers: &'a OutlierVector,
    pub attention: Vec<f64>,
    pub top_k: Vec<f64>,
}

impl<'a> QueryContext<'a> {
    pub fn new(instance: &'a QueryInstance, outliers: &'a OutlierVector, attention_base: f64, k: usize) -> Self {
        let n = instance.len();
        QueryContext {
            instance,
            outliers,
            attention: build_attention(n, attention_base).values,
            top_k: top_k_mask(n, k).values,
        }
    }

    /// Expected metrics of `policy`: linear ones from its marginals, NDCG
    /// through its terms.
    pub fn analytic(&self, policy: &StochasticPolicy) -> QueryMetrics {
        let p = policy.marginals();
        let rel = self.instance.relevances();
        let probs = policy.probabilities();
        let ndcg = |k| {
            policy
                .decomposition
                .terms
                .iter()
                .zip(&probs)
                .map(|(t, w)| w * ndcg_at_k(&t.ranking, &rel, k))
                .sum()
        };
        QueryMetrics {
            ndcg5: ndcg(5),
            ndcg10: ndcg(10),
            dtr: dtr(&p, &self.instance.utilities(), &self.instance.groups(), &self.attention),
            outliers: outlier_count_at_k(&p, &self.outliers.binary_f64(), &self.top_k),
            outlierness: outlierness_at_k(&p, &self.outliers.scores, &self.top_k),
        }
    }

    /// Samples `draws` rankings and returns empirical means with their
    /// standard errors.
    ///
    /// The dTR estimate is the ratio of the mean group exposure rates; its
    /// standard error uses the delta method.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        policy: &StochasticPolicy,
        draws: usize,
        rng: &mut R,
    ) -> (QueryMetrics, QueryMetrics) {
        let rel = self.instance.relevances();
        let u = self.instance.utilities();
        let groups = self.instance.groups();
        let ob = self.outliers.binary_f64();
        let n = self.instance.len();
        // ndcg5, ndcg10, outliers, outlierness, dis rate, priv rate
        let mut sum = [0.0f64; 6];
        let mut sq = [0.0f64; 6];
        let mut cross = 0.0;
        let mut exp = vec![0.0; n];
        for _ in 0..draws {
            let sigma = sample_ranking(policy, rng);
            for (pos, &item) in sigma.order().iter().enumerate() {
                exp[item] = self.attention[pos];
            }
            let (a, b) = group_exposure_rates(&exp, &u, &groups).unwrap_or((0.0, 0.0));
            let x = [
                ndcg_at_k(sigma, &rel, 5),
                ndcg_at_k(sigma, &rel, 10),
                ranking_outlierness(sigma, &ob, &self.top_k),
                ranking_outlierness(sigma, &self.outliers.scores, &self.top_k),
                a,
                b,
            ];
            for i in 0..6 {
                sum[i] += x[i];
                sq[i] += x[i] * x[i];
            }
            cross += a * b;
        }
        let m = draws as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
        let var: Vec<f64> = (0..6).map(|i| (sq[i] / m - mean[i] * mean[i]).max(0.0) * m / (m - 1.0).max(1.0)).collect();
        let se = |i: usize| (var[i] / m).sqrt();

        let defined = group_exposure_rates(&vec![1.0; n], &u, &groups).is_some() && mean[5] > 0.0;
        let (dtr_mean, dtr_se) = if defined {
            let r = mean[4] / mean[5];
            let cov = (cross / m - mean[4] * mean[5]) * m / (m - 1.0).max(1.0);
            let var_r = (var[4] - 2.0 * r * cov + r * r * var[5]).max(0.0) / (mean[5] * mean[5]);
            (Some(r), Some((var_r / m).sqrt()))
        } else {
            (None, None)
        };
        (
            QueryMetrics {
                ndcg5: mean[0],
                ndcg10: mean[1],
                dtr: dtr_mean,
                outliers: mean[2],
                outlierness: mean[3],
            },
            QueryMetrics {
                ndcg5: se(0),
                ndcg10: se(1),
                dtr: dtr_se,
                outliers: se(2),
                outlierness: se(3),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub method: String,
    pub sequence_length: usize,
    pub seed: u64,
    /// Cut-off for the outlier metrics.
    pub top_k: usize,
    pub attention_base: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            method: "utility".into(),
            sequence_length: DEFAULT_SEQUENCE_LENGTH,
            seed: 42,
            top_k: 10,
            attention_base: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub qid: String,
    pub method: String,
    pub impressions: usize,
    pub fallback: bool,
    pub analytic: QueryMetrics,
    pub empirical: QueryMetrics,
    pub std_error: QueryMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub sequence_length: usize,
    pub seed: u64,
    pub top_k: usize,
    pub rows: Vec<QueryRow>,
    pub aggregate_analytic: QueryMetrics,
    pub aggregate_empirical: QueryMetrics,
    pub fallback_rate: f64,
    /// Queries whose relevance labels are all zero (NDCG fixed at 1).
    pub zero_relevance_qids: Vec<String>,
}

/// Impressions per query: one each, the rest split by frequency with
/// largest-remainder rounding (ties go to the earlier query).
pub fn allocate_impressions(frequencies: &[u64], sequence_length: usize) -> Vec<usize> {
    let q = frequencies.len();
    let mut counts = vec![1usize; q];
    let rest = sequence_length.saturating_sub(q);
    let total: u64 = frequencies.iter().sum();
    if rest == 0 || total == 0 {
        return counts;
    }
    let shares: Vec<f64> = frequencies
        .iter()
        .map(|&f| rest as f64 * f as f64 / total as f64)
        .collect();
    let mut assigned = 0;
    for (c, s) in counts.iter_mut().zip(&shares) {
        let whole = s.floor() as usize;
        *c += whole;
        assigned += whole;
    }
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(rest - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Evaluates one policy per query over a stream of `sequence_length`
/// impressions.
///
/// Each query draws from its own generator, seeded from `seed` and the
/// query's position in the corpus, so results do not depend on the number
/// of worker threads.
pub fn evaluate_query_sequence(
    corpus: &Corpus,
    policies: &HashMap<String, StochasticPolicy>,
    outliers: &HashMap<String, OutlierVector>,
    config: &EvalConfig,
) -> Result<MetricsReport, MetricsError> {
    let freqs: Vec<u64> = corpus.queries.iter().map(|q| q.frequency).collect();
    let impressions = allocate_impressions(&freqs, config.sequence_length);

    let mut inputs = Vec::with_capacity(corpus.queries.len());
    for q in &corpus.queries {
        let policy = policies
            .get(&q.qid)
            .ok_or_else(|| MetricsError::MissingPolicy(q.qid.clone()))?;
        let o = outliers
            .get(&q.qid)
            .ok_or_else(|| MetricsError::MissingOutliers(q.qid.clone()))?;
        let mismatch = |message: String| MetricsError::Mismatch {
            qid: q.qid.clone(),
            message,
        };
        if policy.decomposition.is_empty() || policy.decomposition.size() != q.len() {
            return Err(mismatch(format!(
                "policy ranks {} items, query has {}",
                policy.decomposition.size(),
                q.len()
            )));
        }
        if o.len() != q.len() {
            return Err(mismatch(format!("outlier vector has {} entries, query has {}", o.len(), q.len())));
        }
        inputs.push((q, policy, o));
    }

    let rows: Vec<QueryRow> = inputs
        .par_iter()
        .zip(&impressions)
        .enumerate()
        .map(|(idx, (&(q, policy, o), &draws))| {
            let ctx = QueryContext::new(q, o, config.attention_base, config.top_k);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(idx as u64);
            let (empirical, std_error) = ctx.sample(policy, draws, &mut rng);
            QueryRow {
                qid: q.qid.clone(),
                method: config.method.clone(),
                impressions: draws,
                fallback: policy.fallback,
                analytic: ctx.analytic(policy),
                empirical,
                std_error,
            }
        })
        .collect();

    let weights: Vec<f64> = rows.iter().map(|r| r.impressions as f64).collect();
    let aggregate_analytic = weighted_mean(rows.iter().map(|r| &r.analytic), &weights);
    let aggregate_empirical = weighted_mean(rows.iter().map(|r| &r.empirical), &weights);
    let fallback_rate = if rows.is_empty() {
        0.0
    } else {
        rows.iter().filter(|r| r.fallback).count() as f64 / rows.len() as f64
    };
    let zero_relevance_qids = corpus
        .queries
        .iter()
        .filter(|q| q.items.iter().all(|i| i.relevance <= 0.0))
        .map(|q| q.qid.clone())
        .collect();
    Ok(MetricsReport {
        method: config.method.clone(),
        sequence_length: impressions.iter().sum(),
        seed: config.seed,
        top_k: config.top_k,
        rows,
        aggregate_analytic,
        aggregate_empirical,
        fallback_rate,
        zero_relevance_qids,
    })
}

/// Weighted mean of each field; dTR averages only the queries where it is
/// defined.
pub fn weighted_mean<'a>(rows: impl Iterator<Item = &'a QueryMetrics>, weights: &[f64]) -> QueryMetrics {
    let mut acc = QueryMetrics::default();
    let mut total = 0.0;
    let (mut dtr_sum, mut dtr_w) = (0.0, 0.0);
    for (m, &w) in rows.zip(weights) {
        acc.ndcg5 += w * m.ndcg5;
        acc.ndcg10 += w * m.ndcg10;
        acc.outliers += w * m.outliers;
        acc.outlierness += w * m.outlierness;
        total += w;
        if let Some(d) = m.dtr {
            dtr_sum += w * d;
            dtr_w += w;
        }
    }
    if total > 0.0 {
        acc.ndcg5 /= total;
        acc.ndcg10 /= total;
        acc.outliers /= total;
        acc.outlierness /= total;
    }
    acc.dtr = (dtr_w > 0.0).then(|| dtr_sum / dtr_w);
    acc
}

/// Relative improvement in percent; positive means better. `None` when the
/// baseline is zero.
pub fn delta_pct(value: f64, baseline: f64, maximize: bool) -> Option<f64> {
    if baseline == 0.0 {
        return None;
    }
    let d = if maximize { value - baseline } else { baseline - value };
    Some(100.0 * d / baseline)
}

fn delta_fields(m: &QueryMetrics, base: &QueryMetrics) -> [Option<f64>; 4] {
    [
        delta_pct(m.ndcg5, base.ndcg5, true),
        delta_pct(m.ndcg10, base.ndcg10, true),
        delta_pct(m.outliers, base.outliers, false),
        delta_pct(m.outlierness, base.outlierness, false),
    ]
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}

/// Which set of per-query values a CSV carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimate {
    Analytic,
    Empirical,
}

impl QueryRow {
    fn metrics(&self, which: Estimate) -> &QueryMetrics {
        match which {
            Estimate::Analytic => &self.analytic,
            Estimate::Empirical => &self.empirical,
        }
    }
}

impl MetricsReport {
    pub fn row(&self, qid: &str) -> Option<&QueryRow> {
        self.rows.iter().find(|r| r.qid == qid)
    }

    pub fn aggregate(&self, which: Estimate) -> &QueryMetrics {
        match which {
            Estimate::Analytic => &self.aggregate_analytic,
            Estimate::Empirical => &self.aggregate_empirical,
        }
    }

    /// Per-query CSV. With a baseline, Δ% columns follow the metric columns;
    /// queries missing from the baseline get empty Δ cells.
    pub fn write_csv<W: Write>(&self, mut w: W, which: Estimate, baseline: Option<&MetricsReport>) -> io::Result<()> {
        let k = self.top_k;
        write!(w, "qid,method,ndcg@5,ndcg@10,dtr,outliers@{k},outlierness@{k},fallback")?;
        if baseline.is_some() {
            write!(w, ",delta_ndcg@5,delta_ndcg@10,delta_outliers@{k},delta_outlierness@{k}")?;
        }
        writeln!(w)?;
        for r in &self.rows {
            let m = r.metrics(which);
            write!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.qid,
                r.method,
                fmt_f64(m.ndcg5),
                fmt_f64(m.ndcg10),
                fmt_opt(m.dtr),
                fmt_f64(m.outliers),
                fmt_f64(m.outlierness),
                r.fallback
            )?;
            if let Some(base) = baseline {
                let deltas = match base.row(&r.qid) {
                    Some(b) => delta_fields(m, b.metrics(which)),
                    None => [None; 4],
                };
                for d in deltas {
                    write!(w, ",{}", fmt_opt(d))?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Aggregate summary as JSON.
    pub fn summary_json(&self, baseline: Option<&MetricsReport>) -> serde_json::Value {
        let mut v = serde_json::json!({
            "method": self.method,
            "sequence_length": self.sequence_length,
            "seed": self.seed,
            "top_k": self.top_k,
            "queries": self.rows.len(),
            "fallback_rate": self.fallback_rate,
            "zero_relevance_qids": self.zero_relevance_qids,
            "analytic": self.aggregate_analytic,
            "empirical": self.aggregate_empirical,
        });
        if let Some(base) = baseline {
            let names = ["ndcg5", "ndcg10", "outliers", "outlierness"];
            let mut delta = serde_json::Map::new();
            for which in [Estimate::Analytic, Estimate::Empirical] {
                let d = delta_fields(self.aggregate(which), base.aggregate(which));
                let obj: serde_json::Map<String, serde_json::Value> =
                    names.iter().zip(d).map(|(n, x)| (n.to_string(), serde_json::json!(x))).collect();
                let key = if which == Estimate::Analytic { "analytic" } else { "empirical" };
                delta.insert(key.into(), obj.into());
            }
            v["baseline_method"] = serde_json::json!(base.method);
            v["delta_pct"] = delta.into();
        }
        v
    }
}
