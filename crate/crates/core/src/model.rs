//! Queries, items, rankings and the JSONL corpus format.
//!
//! Each corpus line is one query:
//!
//! ```text
//! {"qid":"q1","frequency":3,"items":[{"id":"a","utility":0.9,"relevance":1.0,"group":"dis","features":[12.0]}]}
//! ```
//!
//! `relevance` is optional and defaults to `utility`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "dis")]
    Disadvantaged,
    #[serde(rename = "priv")]
    Privileged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub utility: f64,
    pub relevance: f64,
    pub group: Group,
    pub features: Vec<f64>,
}

impl Item {
    /// Item whose relevance equals its utility.
    pub fn new(id: impl Into<String>, utility: f64, group: Group, features: Vec<f64>) -> Self {
        Item {
            id: id.into(),
            utility,
            relevance: utility,
            group,
            features,
        }
    }

    pub fn with_relevance(mut self, relevance: f64) -> Self {
        self.relevance = relevance;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryInstance {
    pub qid: String,
    pub frequency: u64,
    pub items: Vec<Item>,
}

impl QueryInstance {
    /// Builds and validates a query.
    pub fn new(qid: impl Into<String>, frequency: u64, items: Vec<Item>) -> Result<Self, CorpusError> {
        let q = QueryInstance {
            qid: qid.into(),
            frequency,
            items,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn utilities(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.utility).collect()
    }

    pub fn relevances(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.relevance).collect()
    }

    pub fn groups(&self) -> Vec<Group> {
        self.items.iter().map(|it| it.group).collect()
    }

    pub fn feature_dim(&self) -> usize {
        self.items.first().map_or(0, |it| it.features.len())
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let qid = self.qid.as_str();
        if self.frequency < 1 {
            return Err(CorpusError::invalid(qid, "frequency must be at least 1"));
        }
        if self.items.is_empty() {
            return Err(CorpusError::invalid(qid, "query has no items"));
        }
        let dim = self.feature_dim();
        let mut seen = HashSet::with_capacity(self.items.len());
        for item in &self.items {
            if !seen.insert(item.id.as_str()) {
                return Err(CorpusError::invalid(qid, format!("duplicate item id {}", item.id)));
            }
            if !item.utility.is_finite() || item.utility < 0.0 {
                return Err(CorpusError::invalid(
                    qid,
                    format!("item {}: utility must be finite and non-negative", item.id),
                ));
            }
            if !item.relevance.is_finite() || item.relevance < 0.0 {
                return Err(CorpusError::invalid(
                    qid,
                    format!("item {}: relevance must be finite and non-negative", item.id),
                ));
            }
            if item.features.is_empty() {
                return Err(CorpusError::invalid(
                    qid,
                    format!("item {}: empty feature vector", item.id),
                ));
            }
            if item.features.len() != dim {
                return Err(CorpusError::invalid(
                    qid,
                    format!(
                        "item {}: feature dimension {} differs from {}",
                        item.id,
                        item.features.len(),
                        dim
                    ),
                ));
            }
            if item.features.iter().any(|x| !x.is_finite()) {
                return Err(CorpusError::invalid(
                    qid,
                    format!("item {}: non-finite feature value", item.id),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub queries: Vec<QueryInstance>,
}

impl Corpus {
    pub fn new(queries: Vec<QueryInstance>) -> Result<Self, CorpusError> {
        let corpus = Corpus { queries };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::with_capacity(self.queries.len());
        for q in &self.queries {
            if !seen.insert(q.qid.as_str()) {
                return Err(CorpusError::invalid(&q.qid, "duplicate qid"));
            }
            q.validate()?;
        }
        Ok(())
    }

    pub fn get(&self, qid: &str) -> Option<&QueryInstance> {
        self.queries.iter().find(|q| q.qid == qid)
    }
}

/// A deterministic ranking. Position `j` holds item `order[j]` (0-based storage).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ranking {
    order: Vec<usize>,
}

impl Ranking {
    /// Validates that `order` is a bijection on `0..order.len()`.
    pub fn new(order: Vec<usize>) -> Option<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return None;
            }
            seen[i] = true;
        }
        Some(Ranking { order })
    }

    pub fn identity(n: usize) -> Self {
        Ranking {
            order: (0..n).collect(),
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Item placed at `position` (0-based).
    pub fn item_at(&self, position: usize) -> usize {
        self.order[position]
    }

    /// `positions()[item]` is the 0-based position of `item`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (j, &i) in self.order.iter().enumerate() {
            pos[i] = j;
        }
        pos
    }

    pub fn to_matrix(&self) -> crate::matrix::Matrix {
        crate::matrix::Matrix::permutation(&self.order)
    }
}

/// Orders items by descending utility, ties by ascending id.
pub fn sort_by_utility(instance: &QueryInstance) -> Ranking {
    let mut order: Vec<usize> = (0..instance.items.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (&instance.items[a], &instance.items[b]);
        ib.utility
            .total_cmp(&ia.utility)
            .then_with(|| ia.id.cmp(&ib.id))
    });
    Ranking { order }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    id: String,
    utility: f64,
    relevance: Option<f64>,
    group: Group,
    features: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuery {
    qid: String,
    frequency: u64,
    items: Vec<RawItem>,
}

impl From<RawQuery> for QueryInstance {
    fn from(raw: RawQuery) -> Self {
        QueryInstance {
            qid: raw.qid,
            frequency: raw.frequency,
            items: raw
                .items
                .into_iter()
                .map(|it| Item {
                    relevance: it.relevance.unwrap_or(it.utility),
                    id: it.id,
                    utility: it.utility,
                    group: it.group,
                    features: it.features,
                })
                .collect(),
        }
    }
}

/// Parses a JSONL corpus from any reader. Blank lines are ignored.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut queries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawQuery = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        queries.push(QueryInstance::from(raw));
    }
    if queries.is_empty() {
        return Err(CorpusError::Empty);
    }
    Corpus::new(queries)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let file = File::open(path)?;
    read_corpus(BufReader::new(file))
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut writer: W) -> std::io::Result<()> {
    for q in &corpus.queries {
        serde_json::to_writer(&mut writer, q)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> std::io::Result<()> {
    write_corpus(corpus, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Corpus, CorpusError> {
        read_corpus(text.as_bytes())
    }

    #[test]
    fn minimal_record_loads() {
        let c = parse(
            r#"{"qid":"q1","frequency":1,"items":[{"id":"a","utility":1.0,"group":"priv","features":[3.0]}]}"#,
        )
        .unwrap();
        assert_eq!(c.queries.len(), 1);
        assert_eq!(c.queries[0].len(), 1);
        assert_eq!(c.queries[0].items[0].relevance, 1.0);
        assert_eq!(c.queries[0].items[0].group, Group::Privileged);
    }

    #[test]
    fn duplicate_item_id_names_qid_and_id() {
        let err = parse(
            r#"{"qid":"q7","frequency":1,"items":[{"id":"a","utility":1,"group":"dis","features":[1]},{"id":"a","utility":2,"group":"priv","features":[2]}]}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("q7") && msg.contains("duplicate item id a"), "{msg}");
    }

    #[test]
    fn empty_features_rejected() {
        let err = parse(
            r#"{"qid":"q1","frequency":1,"items":[{"id":"a","utility":1,"group":"dis","features":[]}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("empty feature vector"));
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "{\"qid\":\"q1\",\"frequency\":1,\"items\":[{\"id\":\"a\",\"utility\":1,\"group\":\"dis\",\"features\":[1]}]}\n{not json}\n";
        match parse(text) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_rejected() {
        assert!(matches!(parse(""), Err(CorpusError::Empty)));
        assert!(matches!(parse("\n\n"), Err(CorpusError::Empty)));
    }

    #[test]
    fn invariant_violations() {
        let zero_freq = r#"{"qid":"q","frequency":0,"items":[{"id":"a","utility":1,"group":"dis","features":[1]}]}"#;
        assert!(matches!(parse(zero_freq), Err(CorpusError::Invalid { .. })));
        let neg_util = r#"{"qid":"q","frequency":1,"items":[{"id":"a","utility":-1,"group":"dis","features":[1]}]}"#;
        assert!(matches!(parse(neg_util), Err(CorpusError::Invalid { .. })));
        let mixed_dim = r#"{"qid":"q","frequency":1,"items":[{"id":"a","utility":1,"group":"dis","features":[1]},{"id":"b","utility":1,"group":"dis","features":[1,2]}]}"#;
        assert!(matches!(parse(mixed_dim), Err(CorpusError::Invalid { .. })));
        let dup_q = format!("{zero}\n{zero}", zero = zero_freq.replace("\"frequency\":0", "\"frequency\":1"));
        assert!(matches!(parse(&dup_q), Err(CorpusError::Invalid { .. })));
        let bad_group = r#"{"qid":"q","frequency":1,"items":[{"id":"a","utility":1,"group":"other","features":[1]}]}"#;
        assert!(matches!(parse(bad_group), Err(CorpusError::Parse { line: 1, .. })));
    }

    fn query_with_utilities(us: &[f64]) -> QueryInstance {
        let items = us
            .iter()
            .enumerate()
            .map(|(i, &u)| Item::new(format!("d{}", i + 1), u, Group::Privileged, vec![1.0]))
            .collect();
        QueryInstance::new("q", 1, items).unwrap()
    }

    #[test]
    fn sort_by_utility_examples() {
        // utilities (0.1, 0.9, 0.5) -> 1-based order (2, 3, 1)
        assert_eq!(sort_by_utility(&query_with_utilities(&[0.1, 0.9, 0.5])).order(), &[1, 2, 0]);
        assert_eq!(sort_by_utility(&query_with_utilities(&[0.4, 0.4, 0.4])).order(), &[0, 1, 2]);
        assert_eq!(sort_by_utility(&query_with_utilities(&[0.3])).order(), &[0]);
    }

    #[test]
    fn ties_break_by_id_not_input_order() {
        let items = vec![
            Item::new("b", 1.0, Group::Privileged, vec![1.0]),
            Item::new("a", 1.0, Group::Privileged, vec![1.0]),
        ];
        let q = QueryInstance::new("q", 1, items).unwrap();
        assert_eq!(sort_by_utility(&q).order(), &[1, 0]);
    }

    #[test]
    fn ranking_rejects_non_bijection() {
        assert!(Ranking::new(vec![0, 0]).is_none());
        assert!(Ranking::new(vec![0, 2]).is_none());
        assert_eq!(Ranking::new(vec![1, 0]).unwrap().positions(), vec![1, 0]);
    }
}
