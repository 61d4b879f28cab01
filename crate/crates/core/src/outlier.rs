//! Degree-of-outlierness detectors and the per-query outlier vector.
//!
//! Three detectors are provided:
//!
//! * **MAD**: absolute modified Z-score `0.6745 (x - median) / MAD`, flagged
//!   above a fixed threshold (3.5 by default). Multi-dimensional features take
//!   the maximum over dimensions.
//! * **MedKNN**: median Euclidean distance to the `k` nearest neighbours.
//! * **COPOD**: empirical-copula tail probabilities, summed over dimensions.
//!
//! MedKNN and COPOD produce unbounded scores; an item is flagged when its
//! score lies strictly above the `1 - contamination` empirical quantile of the
//! scores inside the detection context.

use serde::{Deserialize, Serialize};

use crate::error::DetectorError;
use crate::model::{QueryInstance, Ranking};

/// Consistency constant of the modified Z-score.
pub const MODIFIED_Z_SCALE: f64 = 0.6745;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorMethod {
    Mad,
    MedKnn,
    Copod,
}

impl std::str::FromStr for DetectorMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mad" => Ok(DetectorMethod::Mad),
            "medknn" => Ok(DetectorMethod::MedKnn),
            "copod" => Ok(DetectorMethod::Copod),
            other => Err(format!("unknown detector {other:?} (expected mad, medknn or copod)")),
        }
    }
}

impl std::fmt::Display for DetectorMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            DetectorMethod::Mad => "mad",
            DetectorMethod::MedKnn => "medknn",
            DetectorMethod::Copod => "copod",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub method: DetectorMethod,
    /// Outlierness context: only the first `context_n` items of the initial
    /// ranking are scored. Clamped to the query size.
    pub context_n: usize,
    pub mad_threshold: f64,
    pub knn_k: usize,
    pub contamination: f64,
    pub normalize: bool,
    /// Pick the COPOD tail by sample skewness instead of taking the more
    /// extreme of both tails.
    pub copod_skew_correction: bool,
}

impl DetectorConfig {
    pub fn new(method: DetectorMethod) -> Self {
        DetectorConfig {
            method,
            context_n: usize::MAX,
            mad_threshold: 3.5,
            knn_k: 5,
            contamination: 0.1,
            normalize: true,
            copod_skew_correction: true,
        }
    }

    pub fn with_context(mut self, context_n: usize) -> Self {
        self.context_n = context_n;
        self
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |m: String| Err(DetectorError::InvalidConfig(m));
        if self.context_n < 1 {
            return bad("context_n must be at least 1".into());
        }
        if !(self.mad_threshold > 0.0 && self.mad_threshold.is_finite()) {
            return bad(format!("mad_threshold {} must be positive", self.mad_threshold));
        }
        if self.knn_k < 1 {
            return bad("knn_k must be at least 1".into());
        }
        if !(self.contamination > 0.0 && self.contamination <= 0.5) {
            return bad(format!("contamination {} not in (0, 0.5]", self.contamination));
        }
        Ok(())
    }
}

/// Per-item outlier scores `o` and their binarisation `o_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierVector {
    pub scores: Vec<f64>,
    pub binary: Vec<u8>,
}

impl OutlierVector {
    pub fn zeros(n: usize) -> Self {
        OutlierVector {
            scores: vec![0.0; n],
            binary: vec![0; n],
        }
    }

    /// Builds the vector from scores; `binary` is derived as `scores > 0`.
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let binary = scores.iter().map(|&s| u8::from(s > 0.0)).collect();
        OutlierVector { scores, binary }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn binary_f64(&self) -> Vec<f64> {
        self.binary.iter().map(|&b| f64::from(b)).collect()
    }

    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.binary.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.flagged().count()
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Absolute modified Z-scores. Returns zeros when the MAD is zero.
pub fn mad_scores(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let med = median(values);
    let deviations: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&deviations);
    if mad == 0.0 {
        return vec![0.0; values.len()];
    }
    deviations.iter().map(|d| MODIFIED_Z_SCALE * d / mad).collect()
}

/// Per-item maximum of [`mad_scores`] across feature dimensions.
pub fn mad_scores_multi(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points.first().map_or(0, Vec::len);
    let mut out = vec![0.0; points.len()];
    for d in 0..dim {
        let column: Vec<f64> = points.iter().map(|p| p[d]).collect();
        for (o, s) in out.iter_mut().zip(mad_scores(&column)) {
            *o = f64::max(*o, s);
        }
    }
    out
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Median distance from each point to its `k` nearest neighbours (self excluded).
pub fn medknn_scores(points: &[Vec<f64>], k: usize) -> Result<Vec<f64>, DetectorError> {
    let n = points.len();
    if n < 2 {
        return Err(DetectorError::InvalidConfig("MedKNN needs at least two points".into()));
    }
    if k < 1 || k >= n {
        return Err(DetectorError::InvalidConfig(format!(
            "knn_k = {k} must be in [1, {}] for {n} points",
            n - 1
        )));
    }
    let mut scores = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n - 1);
    for i in 0..n {
        dists.clear();
        dists.extend((0..n).filter(|&j| j != i).map(|j| euclidean(&points[i], &points[j])));
        dists.sort_by(f64::total_cmp);
        scores.push(median(&dists[..k]));
    }
    Ok(scores)
}

fn skewness(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    if m2 == 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// COPOD scores with skewness correction.
pub fn copod_scores(points: &[Vec<f64>]) -> Vec<f64> {
    copod_scores_with(points, true)
}

/// COPOD scores. Per dimension the left tail is `-ln F(x)` with
/// `F(x) = #{x_j <= x} / n` and the right tail `-ln Fbar(x)` with
/// `Fbar(x) = #{x_j >= x} / n`. With `skew_correction` the tail is chosen by
/// the sign of the sample skewness (left when negative); otherwise the larger
/// of the two is used. Dimension scores are summed.
pub fn copod_scores_with(points: &[Vec<f64>], skew_correction: bool) -> Vec<f64> {
    let n = points.len();
    let dim = points.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let nf = n as f64;
    for d in 0..dim {
        let column: Vec<f64> = points.iter().map(|p| p[d]).collect();
        let mut sorted = column.clone();
        sorted.sort_by(f64::total_cmp);
        let use_left = skewness(&column) < 0.0;
        for (o, &x) in out.iter_mut().zip(&column) {
            let at_most = sorted.partition_point(|&v| v <= x) as f64;
            let at_least = (n - sorted.partition_point(|&v| v < x)) as f64;
            let left = -(at_most / nf).ln();
            let right = -(at_least / nf).ln();
            let tail = if !skew_correction {
                left.max(right)
            } else if use_left {
                left
            } else {
                right
            };
            // -ln(1) can come out as -0.0
            *o += tail.max(0.0);
        }
    }
    out
}

/// Empirical quantile with linear interpolation between order statistics.
pub(crate) fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Builds the outlier vector for one query.
///
/// Only the first `min(context_n, N)` items of `initial` are scored; every
/// other item gets zero.
pub fn detect(
    instance: &QueryInstance,
    initial: &Ranking,
    config: &DetectorConfig,
) -> Result<OutlierVector, DetectorError> {
    config.validate()?;
    let n = instance.len();
    if initial.len() != n {
        return Err(DetectorError::InvalidConfig(format!(
            "initial ranking has {} positions for {} items",
            initial.len(),
            n
        )));
    }
    let context: Vec<usize> = initial.order()[..config.context_n.min(n)].to_vec();
    let points: Vec<Vec<f64>> = context
        .iter()
        .map(|&i| instance.items[i].features.clone())
        .collect();

    let flagged_scores: Vec<f64> = match config.method {
        DetectorMethod::Mad => mad_scores_multi(&points)
            .into_iter()
            .map(|s| if s > config.mad_threshold { s } else { 0.0 })
            .collect(),
        DetectorMethod::MedKnn | DetectorMethod::Copod => {
            if points.len() < 2 {
                vec![0.0; points.len()]
            } else {
                let raw = match config.method {
                    // small contexts cap k at the number of other points
                    DetectorMethod::MedKnn => medknn_scores(&points, config.knn_k.min(points.len() - 1))?,
                    _ => copod_scores_with(&points, config.copod_skew_correction),
                };
                let cut = quantile(&raw, 1.0 - config.contamination);
                raw.into_iter().map(|s| if s > cut { s } else { 0.0 }).collect()
            }
        }
    };

    let max = flagged_scores.iter().copied().fold(0.0, f64::max);
    let mut scores = vec![0.0; n];
    for (&item, &s) in context.iter().zip(&flagged_scores) {
        scores[item] = if config.normalize && max > 0.0 { s / max } else { s };
    }
    Ok(OutlierVector::from_scores(scores))
}
