//! Batch pipeline: detection, ranking, evaluation and parameter sweeps over
//! a whole corpus, plus the JSONL/CSV file formats that connect the stages.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvn::{self, RankingDecomposition};
use crate::error::{BvnError, CorpusError, DetectorError, FairRankError, MetricsError};
use crate::fair_rank::{
    build_attention, build_fairness_vector, remove_outliers_baseline, solve_omit, top_k_mask, ConstraintMode,
    FairRankProblem, FairnessVariant, Provenance,
};
use crate::metrics::{delta_pct, evaluate_query_sequence, EvalConfig, MetricsReport, StochasticPolicy};
use crate::model::{sort_by_utility, Corpus, QueryInstance, Ranking};
use crate::outlier::{detect, DetectorConfig, DetectorMethod, OutlierVector};

/// Pipeline failure, split by who is at fault.
#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad flags or parameter values.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, unwritable or inconsistent files.
    #[error("{0}")]
    Data(String),
    /// A broken internal invariant.
    #[error("internal error: {0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Data(_) => 2,
            PipelineError::Internal(_) => 3,
        }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Data(format!("i/o error: {e}"))
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<DetectorError> for PipelineError {
    fn from(e: DetectorError) -> Self {
        PipelineError::Usage(e.to_string())
    }
}

impl From<MetricsError> for PipelineError {
    fn from(e: MetricsError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

fn with_path(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Utility,
    FoeHard,
    FoeSoft,
    Ro,
    OmitHard,
    OmitSoft,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Utility,
        Method::FoeHard,
        Method::FoeSoft,
        Method::Ro,
        Method::OmitHard,
        Method::OmitSoft,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Utility => "utility",
            Method::FoeHard => "foe-hard",
            Method::FoeSoft => "foe-soft",
            Method::Ro => "ro",
            Method::OmitHard => "omit-hard",
            Method::OmitSoft => "omit-soft",
        }
    }

    pub fn needs_outliers(self) -> bool {
        matches!(self, Method::Ro | Method::OmitHard | Method::OmitSoft)
    }

    /// Constraint mode of the methods that solve a program.
    pub fn mode(self) -> Option<ConstraintMode> {
        match self {
            Method::FoeHard | Method::OmitHard => Some(ConstraintMode::Hard),
            Method::FoeSoft | Method::OmitSoft => Some(ConstraintMode::Soft),
            Method::Utility | Method::Ro => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?} (expected one of utility, foe-hard, foe-soft, ro, omit-hard, omit-soft)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankConfig {
    pub method: Method,
    pub detector: DetectorConfig,
    pub top_k: usize,
    pub attention_base: f64,
    pub lambda_o: f64,
    pub lambda_s: f64,
    pub fairness_variant: FairnessVariant,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            method: Method::Utility,
            detector: DetectorConfig::new(DetectorMethod::Copod),
            top_k: 10,
            attention_base: 2.0,
            lambda_o: 1.0,
            lambda_s: 10.0,
            fairness_variant: FairnessVariant::DtrExact,
        }
    }
}

impl RankConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.detector.validate()?;
        if self.top_k == 0 {
            return Err(PipelineError::Usage("top-k must be at least 1".into()));
        }
        if !(self.attention_base > 1.0) {
            return Err(PipelineError::Usage("attention base must exceed 1".into()));
        }
        if !(self.lambda_o >= 0.0 && self.lambda_s >= 0.0) {
            return Err(PipelineError::Usage("lambda weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Where a policy came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySource {
    /// Built directly from the initial ranking (utility, ro).
    Direct,
    Solved,
    FallbackInitial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessStatus {
    NotUsed,
    Applied,
    /// A group was empty or had no merit; the constraint was dropped.
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub theta: f64,
    /// Item ids from the first position down.
    pub order: Vec<String>,
}

/// One line of a policy file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub qid: String,
    pub method: String,
    pub provenance: PolicySource,
    pub fairness: FairnessStatus,
    pub terms: Vec<TermRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl PolicyRecord {
    pub fn is_fallback(&self) -> bool {
        self.provenance == PolicySource::FallbackInitial
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedQuery {
    pub record: PolicyRecord,
    pub policy: StochasticPolicy,
}

/// Builds the policy of one query. `outliers` is detected on the fly when
/// the method needs it and none is supplied.
pub fn rank_query(
    instance: &QueryInstance,
    outliers: Option<&OutlierVector>,
    config: &RankConfig,
) -> Result<RankedQuery, PipelineError> {
    let n = instance.len();
    let qid = &instance.qid;
    let initial = sort_by_utility(instance);
    let o = if config.method.needs_outliers() {
        match outliers {
            Some(o) if o.len() == n => o.clone(),
            Some(o) => {
                return Err(PipelineError::Data(format!(
                    "query {qid}: outlier vector has {} entries for {n} items",
                    o.len()
                )))
            }
            None => detect(instance, &initial, &config.detector)?,
        }
    } else {
        OutlierVector::zeros(n)
    };

    let mut warning = None;
    let mut fairness = FairnessStatus::NotUsed;
    let (decomposition, provenance) = match config.method {
        Method::Utility => (RankingDecomposition::single(initial.clone()), PolicySource::Direct),
        Method::Ro => {
            let out = remove_outliers_baseline(&initial, &o);
            if out.all_flagged {
                warning = Some("all items flagged; initial ranking kept".to_string());
            }
            (RankingDecomposition::single(out.ranking), PolicySource::Direct)
        }
        method => {
            let mode = method.mode().expect("solving methods have a mode");
            let u = instance.utilities();
            let f = match build_fairness_vector(&u, &instance.groups(), config.fairness_variant) {
                Ok(f) => {
                    fairness = FairnessStatus::Applied;
                    Some(f)
                }
                Err(FairRankError::FairnessUnavailable(why)) => {
                    fairness = FairnessStatus::Unavailable;
                    warning = Some(format!("fairness constraint dropped: {why}"));
                    None
                }
                Err(e) => return Err(PipelineError::Internal(format!("query {qid}: {e}"))),
            };
            let with_outliers = matches!(method, Method::OmitHard | Method::OmitSoft);
            let problem = FairRankProblem {
                utilities: u,
                attention: build_attention(n, config.attention_base),
                outliers: if with_outliers { o.scores.clone() } else { vec![0.0; n] },
                top_k: top_k_mask(n, config.top_k),
                fairness: f,
                mode,
                lambda_o: if with_outliers { config.lambda_o } else { 0.0 },
                lambda_s: config.lambda_s,
            };
            let solved =
                solve_omit(&problem, &initial).map_err(|e| PipelineError::Internal(format!("query {qid}: {e}")))?;
            match solved.provenance {
                Provenance::FallbackInitial => {
                    (RankingDecomposition::single(initial.clone()), PolicySource::FallbackInitial)
                }
                Provenance::Solved => {
                    let d = bvn::decompose(&solved.p, bvn::ZERO_TOL)
                        .map_err(|e: BvnError| PipelineError::Internal(format!("query {qid}: {e}")))?;
                    (d, PolicySource::Solved)
                }
            }
        }
    };

    let record = PolicyRecord {
        qid: qid.clone(),
        method: config.method.name().to_string(),
        provenance,
        fairness,
        terms: decomposition
            .terms
            .iter()
            .map(|t| TermRecord {
                theta: t.weight,
                order: t.ranking.order().iter().map(|&i| instance.items[i].id.clone()).collect(),
            })
            .collect(),
        warning,
    };
    let policy = StochasticPolicy {
        qid: qid.clone(),
        decomposition,
        fallback: provenance == PolicySource::FallbackInitial,
    };
    Ok(RankedQuery { record, policy })
}

/// Ranks every query in parallel; the output follows corpus order.
pub fn rank_corpus(
    corpus: &Corpus,
    outliers: Option<&HashMap<String, OutlierVector>>,
    config: &RankConfig,
) -> Result<Vec<RankedQuery>, PipelineError> {
    config.validate()?;
    if let (Some(map), true) = (outliers, config.method.needs_outliers()) {
        if let Some(q) = corpus.queries.iter().find(|q| !map.contains_key(&q.qid)) {
            return Err(PipelineError::Data(format!("no outlier vector for query {}", q.qid)));
        }
    }
    corpus
        .queries
        .par_iter()
        .map(|q| rank_query(q, outliers.and_then(|m| m.get(&q.qid)), config))
        .collect()
}

/// Detects outliers for every query against its utility-sorted ranking.
pub fn detect_corpus(corpus: &Corpus, config: &DetectorConfig) -> Result<Vec<OutlierVector>, PipelineError> {
    config.validate()?;
    corpus
        .queries
        .par_iter()
        .map(|q| Ok(detect(q, &sort_by_utility(q), config)?))
        .collect()
}

pub fn outlier_map(corpus: &Corpus, vectors: Vec<OutlierVector>) -> HashMap<String, OutlierVector> {
    corpus.queries.iter().map(|q| q.qid.clone()).zip(vectors).collect()
}

/// Number of flagged items at each position of the utility-sorted rankings.
pub fn position_histogram(corpus: &Corpus, outliers: &[OutlierVector]) -> Vec<usize> {
    let width = corpus.queries.iter().map(QueryInstance::len).max().unwrap_or(0);
    let mut counts = vec![0; width];
    for (q, o) in corpus.queries.iter().zip(outliers) {
        for (pos, &item) in sort_by_utility(q).order().iter().enumerate() {
            counts[pos] += usize::from(o.binary[item] == 1);
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub method: String,
    pub queries: usize,
    pub fallback_count: usize,
    pub fallback_rate: f64,
    pub fallback_qids: Vec<String>,
    pub fairness_unavailable: usize,
    pub warnings: usize,
}

impl RankSummary {
    pub fn from_records(method: Method, records: &[PolicyRecord]) -> Self {
        let fallback_qids: Vec<String> = records.iter().filter(|r| r.is_fallback()).map(|r| r.qid.clone()).collect();
        let queries = records.len();
        RankSummary {
            method: method.name().to_string(),
            queries,
            fallback_count: fallback_qids.len(),
            fallback_rate: if queries == 0 { 0.0 } else { fallback_qids.len() as f64 / queries as f64 },
            fallback_qids,
            fairness_unavailable: records.iter().filter(|r| r.fairness == FairnessStatus::Unavailable).count(),
            warnings: records.iter().filter(|r| r.warning.is_some()).count(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    File::create(path).map(BufWriter::new).map_err(|e| with_path(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), PipelineError> {
    let mut w = create(path)?;
    for row in rows {
        serde_json::to_writer(&mut w, &row).map_err(|e| with_path(path, e))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = File::open(path).map_err(|e| with_path(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| with_path(path, format!("line {}: {e}", idx + 1)))?);
    }
    Ok(out)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| with_path(path, e))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct OutlierRecord {
    qid: String,
    scores: Vec<f64>,
    binary: Vec<u8>,
}

pub fn write_outliers(path: &Path, corpus: &Corpus, outliers: &[OutlierVector]) -> Result<(), PipelineError> {
    write_jsonl(
        path,
        corpus.queries.iter().zip(outliers).map(|(q, o)| OutlierRecord {
            qid: q.qid.clone(),
            scores: o.scores.clone(),
            binary: o.binary.clone(),
        }),
    )
}

pub fn read_outliers(path: &Path) -> Result<HashMap<String, OutlierVector>, PipelineError> {
    let mut map = HashMap::new();
    for r in read_jsonl::<OutlierRecord>(path)? {
        if r.scores.len() != r.binary.len() || r.binary.iter().any(|&b| b > 1) {
            return Err(with_path(path, format!("query {}: malformed outlier vector", r.qid)));
        }
        map.insert(
            r.qid,
            OutlierVector {
                scores: r.scores,
                binary: r.binary,
            },
        );
    }
    Ok(map)
}

pub fn write_policies(path: &Path, records: &[PolicyRecord]) -> Result<(), PipelineError> {
    write_jsonl(path, records)
}

/// Policies of one run, keyed by qid.
#[derive(Debug, Clone)]
pub struct PolicySet {
    pub method: String,
    pub policies: HashMap<String, StochasticPolicy>,
}

/// Reads a policy file and resolves item ids against `corpus`. Records for
/// qids absent from the corpus are ignored.
pub fn read_policies(path: &Path, corpus: &Corpus) -> Result<PolicySet, PipelineError> {
    let records: Vec<PolicyRecord> = read_jsonl(path)?;
    let method = records.first().map_or_else(|| "unknown".to_string(), |r| r.method.clone());
    let mut policies = HashMap::new();
    for r in records {
        let Some(q) = corpus.get(&r.qid) else { continue };
        let bad = |msg: String| with_path(path, format!("query {}: {msg}", r.qid));
        let index: HashMap<&str, usize> = q.items.iter().enumerate().map(|(i, it)| (it.id.as_str(), i)).collect();
        let mut terms = Vec::with_capacity(r.terms.len());
        for t in &r.terms {
            let order = t
                .order
                .iter()
                .map(|id| index.get(id.as_str()).copied().ok_or_else(|| bad(format!("unknown item {id}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let ranking = Ranking::new(order).ok_or_else(|| bad("term is not a permutation of the items".into()))?;
            if ranking.len() != q.len() || !(t.theta > 0.0 && t.theta <= 1.0 + 1e-9) {
                return Err(bad("invalid term".into()));
            }
            terms.push(bvn::DecompositionTerm {
                weight: t.theta,
                ranking,
            });
        }
        if terms.is_empty() {
            return Err(bad("policy has no terms".into()));
        }
        let decomposition = RankingDecomposition { terms, residual: 0.0 };
        let residual = (1.0 - decomposition.weight_sum()).max(0.0);
        policies.insert(
            r.qid.clone(),
            StochasticPolicy {
                qid: r.qid.clone(),
                decomposition: RankingDecomposition { residual, ..decomposition },
                fallback: r.is_fallback(),
            },
        );
    }
    Ok(PolicySet { method, policies })
}

pub fn policy_map(ranked: &[RankedQuery]) -> HashMap<String, StochasticPolicy> {
    ranked.iter().map(|r| (r.record.qid.clone(), r.policy.clone())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    ContextN,
    TopK,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "context-n" | "context_n" => Ok(SweepParam::ContextN),
            "top-k" | "top_k" => Ok(SweepParam::TopK),
            other => Err(format!("unknown sweep parameter {other:?} (expected context-n or top-k)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub param_value: usize,
    pub ndcg10: f64,
    /// Relative reduction of outlierness@k versus the utility ranking;
    /// `None` when the utility ranking shows no outlierness.
    pub outlierness_improvement_pct: Option<f64>,
}

/// Runs detection, ranking and evaluation once per value of `param`, each
/// time against the utility ranking scored with the same outlier vectors
/// and cut-off.
pub fn run_sweep(
    corpus: &Corpus,
    base: &RankConfig,
    eval: &EvalConfig,
    param: SweepParam,
    values: &[usize],
) -> Result<Vec<SweepRow>, PipelineError> {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        if value == 0 {
            return Err(PipelineError::Usage("sweep values must be positive".into()));
        }
        let mut config = base.clone();
        match param {
            SweepParam::ContextN => config.detector.context_n = value,
            SweepParam::TopK => config.top_k = value,
        }
        let (method, baseline) = evaluate_against_utility(corpus, &config, eval)?;
        rows.push(SweepRow {
            param_value: value,
            ndcg10: method.aggregate_analytic.ndcg10,
            outlierness_improvement_pct: delta_pct(
                method.aggregate_analytic.outlierness,
                baseline.aggregate_analytic.outlierness,
                false,
            ),
        });
    }
    Ok(rows)
}

/// Full pipeline for `config.method` and for the utility ranking, both
/// evaluated with outliers detected under `config.detector` and outlier
/// metrics cut at `config.top_k`.
pub fn evaluate_against_utility(
    corpus: &Corpus,
    config: &RankConfig,
    eval: &EvalConfig,
) -> Result<(MetricsReport, MetricsReport), PipelineError> {
    let outliers = outlier_map(corpus, detect_corpus(corpus, &config.detector)?);
    let eval = EvalConfig {
        top_k: config.top_k,
        attention_base: config.attention_base,
        ..eval.clone()
    };
    let run = |method: Method| -> Result<MetricsReport, PipelineError> {
        let cfg = RankConfig { method, ..config.clone() };
        let ranked = rank_corpus(corpus, Some(&outliers), &cfg)?;
        let eval = EvalConfig {
            method: method.name().to_string(),
            ..eval.clone()
        };
        Ok(evaluate_query_sequence(corpus, &policy_map(&ranked), &outliers, &eval)?)
    };
    Ok((run(config.method)?, run(Method::Utility)?))
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "param_value,ndcg@10,outlierness_improvement_pct")?;
    for r in rows {
        let imp = r.outlierness_improvement_pct.map(|x| format!("{x:.6}")).unwrap_or_default();
        writeln!(w, "{},{:.6},{}", r.param_value, r.ndcg10, imp)?;
    }
    Ok(())
}

/// Runs `f` on a rayon pool capped by the `OMIT_RANK_THREADS` environment
/// variable (all cores when unset).
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("OMIT_RANK_THREADS") {
        let threads: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| PipelineError::Usage(format!("OMIT_RANK_THREADS must be a positive integer, got {raw:?}")))?;
        builder = builder.num_threads(threads);
    }
    let pool = builder
        .build()
        .map_err(|e| PipelineError::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Group, Item};
    use crate::synthetic::{generate_synthetic, SyntheticConfig};

    fn small_corpus() -> Corpus {
        generate_synthetic(&SyntheticConfig {
            num_queries: 6,
            items_per_query: 8,
            ..SyntheticConfig::default()
        })
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("omit".parse::<Method>().is_err());
    }

    #[test]
    fn utility_policies_are_deterministic() {
        let corpus = small_corpus();
        let ranked = rank_corpus(&corpus, None, &RankConfig::default()).unwrap();
        for (r, q) in ranked.iter().zip(&corpus.queries) {
            assert_eq!(r.record.terms.len(), 1);
            assert_eq!(r.policy.decomposition.terms[0].ranking, sort_by_utility(q));
            assert_eq!(r.record.provenance, PolicySource::Direct);
        }
    }

    #[test]
    fn every_method_yields_valid_policies() {
        let corpus = small_corpus();
        for method in Method::ALL {
            let config = RankConfig { method, ..RankConfig::default() };
            for r in rank_corpus(&corpus, None, &config).unwrap() {
                let d = &r.policy.decomposition;
                assert!((d.weight_sum() - 1.0).abs() < 1e-6, "{method}");
                assert!(d.reconstruct().is_doubly_stochastic(1e-6), "{method}");
            }
        }
    }

    #[test]
    fn single_group_query_drops_fairness() {
        let items = (0..4)
            .map(|i| Item::new(format!("d{i}"), 1.0 - 0.2 * i as f64, Group::Privileged, vec![i as f64]))
            .collect();
        let q = QueryInstance::new("solo", 1, items).unwrap();
        let config = RankConfig {
            method: Method::FoeHard,
            ..RankConfig::default()
        };
        let r = rank_query(&q, None, &config).unwrap();
        assert_eq!(r.record.fairness, FairnessStatus::Unavailable);
        assert_eq!(r.record.provenance, PolicySource::Solved);
        assert!(r.record.warning.is_some());
    }

    #[test]
    fn infeasible_query_is_marked_fallback() {
        // merit ratio 2 cannot be matched by two positions with v1 / v2 = 1.585
        let items = vec![
            Item::new("a", 1.0, Group::Privileged, vec![0.0]),
            Item::new("b", 0.5, Group::Disadvantaged, vec![0.0]),
        ];
        let q = QueryInstance::new("tight", 1, items).unwrap();
        let config = RankConfig {
            method: Method::FoeHard,
            ..RankConfig::default()
        };
        let r = rank_query(&q, None, &config).unwrap();
        assert!(r.record.is_fallback() && r.policy.fallback);
        assert_eq!(r.policy.decomposition.terms[0].ranking, Ranking::identity(2));
        let summary = RankSummary::from_records(Method::FoeHard, &[r.record]);
        assert_eq!(summary.fallback_count, 1);
        assert_eq!(summary.fallback_rate, 1.0);
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus();
        let outliers = detect_corpus(&corpus, &DetectorConfig::new(DetectorMethod::Copod)).unwrap();
        let opath = dir.path().join("outliers.jsonl");
        write_outliers(&opath, &corpus, &outliers).unwrap();
        let back = read_outliers(&opath).unwrap();
        for (q, o) in corpus.queries.iter().zip(&outliers) {
            assert_eq!(&back[&q.qid], o);
        }

        let config = RankConfig {
            method: Method::OmitSoft,
            ..RankConfig::default()
        };
        let ranked = rank_corpus(&corpus, Some(&back), &config).unwrap();
        let records: Vec<PolicyRecord> = ranked.iter().map(|r| r.record.clone()).collect();
        let ppath = dir.path().join("policies.jsonl");
        write_policies(&ppath, &records).unwrap();
        let set = read_policies(&ppath, &corpus).unwrap();
        assert_eq!(set.method, "omit-soft");
        for r in &ranked {
            let p = &set.policies[&r.record.qid];
            assert!(p.marginals().max_abs_diff(&r.policy.marginals()) < 1e-12);
        }
    }

    #[test]
    fn histogram_counts_flags() {
        let corpus = small_corpus();
        let outliers = detect_corpus(&corpus, &DetectorConfig::new(DetectorMethod::Mad)).unwrap();
        let hist = position_histogram(&corpus, &outliers);
        assert_eq!(hist.len(), 8);
        assert_eq!(hist.iter().sum::<usize>(), outliers.iter().map(OutlierVector::count).sum::<usize>());
    }

    #[test]
    fn sweep_rows() {
        let corpus = small_corpus();
        let config = RankConfig {
            method: Method::OmitSoft,
            ..RankConfig::default()
        };
        let eval = EvalConfig {
            sequence_length: 200,
            ..EvalConfig::default()
        };
        let rows = run_sweep(&corpus, &config, &eval, SweepParam::TopK, &[2, 4, 8]).unwrap();
        assert_eq!(rows.iter().map(|r| r.param_value).collect::<Vec<_>>(), vec![2, 4, 8]);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
