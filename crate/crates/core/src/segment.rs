//! Cluster extraction below a stencil threshold and threshold selection by partition score.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::delta::DeltaProfile;
use crate::error::{Error, Result};
use crate::matrix::{with_storage, DistanceMatrix, Scalar};

/// Label of elements that belong to no cluster.
pub const NOISE: i64 = -1;

/// Default minimal cluster size in percent of the element count.
pub const DEFAULT_MIN_SIZE_PCT: f64 = 2.0;
/// Default number of evenly spaced thresholds tried by the scan.
pub const DEFAULT_CANDIDATES: usize = 200;
/// Fraction of the profile range excluded from the scan when `use_all_cutoff` is off.
pub const LOW_CUTOFF_EXCLUSION: f64 = 0.10;

/// One cluster: contiguous runs of reordered positions, plus positions that joined later
/// by expansion (those are not contiguous and only show up in labels).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub ranges: Vec<Range<usize>>,
    #[serde(default)]
    pub expanded: Vec<usize>,
}

impl Cluster {
    pub fn from_range(range: Range<usize>) -> Self {
        Cluster {
            ranges: vec![range],
            expanded: Vec::new(),
        }
    }

    /// Number of members, including expanded ones.
    pub fn size(&self) -> usize {
        self.ranges.iter().map(|r| r.len()).sum::<usize>() + self.expanded.len()
    }

    /// First reordered position covered by a range.
    pub fn first_position(&self) -> usize {
        self.ranges.iter().map(|r| r.start).min().unwrap_or(usize::MAX)
    }

    /// Positions covered by the ranges, ascending.
    pub fn range_positions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.ranges.iter().flat_map(|r| r.clone()).collect();
        v.sort_unstable();
        v
    }

    /// All member positions, ascending.
    pub fn positions(&self) -> Vec<usize> {
        let mut v = self.range_positions();
        v.extend_from_slice(&self.expanded);
        v.sort_unstable();
        v
    }
}

/// Clusters over a reordering, with a label for every original element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClusterSet")]
pub struct ClusterSet {
    order: Vec<usize>,
    clusters: Vec<Cluster>,
    #[serde(skip_serializing)]
    labels: Vec<i64>,
}

#[derive(Deserialize)]
struct RawClusterSet {
    order: Vec<usize>,
    clusters: Vec<Cluster>,
}

impl TryFrom<RawClusterSet> for ClusterSet {
    type Error = Error;

    fn try_from(raw: RawClusterSet) -> Result<Self> {
        ClusterSet::new(raw.order, raw.clusters)
    }
}

impl ClusterSet {
    /// Validates that clusters are disjoint and inside `0..n`, and derives labels.
    pub fn new(order: Vec<usize>, clusters: Vec<Cluster>) -> Result<Self> {
        let n = order.len();
        crate::matrix::check_permutation(&order, n)?;
        let mut labels = vec![NOISE; n];
        for (j, c) in clusters.iter().enumerate() {
            if c.size() == 0 {
                return Err(Error::param("clusters", format!("cluster {j} is empty")));
            }
            let mut mark = |p: usize| -> Result<()> {
                if p >= n {
                    return Err(Error::param("clusters", format!("position {p} out of range")));
                }
                let slot = &mut labels[order[p]];
                if *slot != NOISE {
                    return Err(Error::param(
                        "clusters",
                        format!("position {p} belongs to clusters {slot} and {j}"),
                    ));
                }
                *slot = j as i64;
                Ok(())
            };
            for r in &c.ranges {
                for p in r.clone() {
                    mark(p)?;
                }
            }
            for &p in &c.expanded {
                mark(p)?;
            }
        }
        Ok(ClusterSet {
            order,
            clusters,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, j: usize) -> Result<&Cluster> {
        self.clusters.get(j).ok_or(Error::UnknownCluster {
            id: j,
            available: self.clusters.len(),
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Label per original element; [`NOISE`] for unclustered ones.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Original indices of cluster `j`, in reordered-position order.
    pub fn members(&self, j: usize) -> Vec<usize> {
        self.clusters[j]
            .positions()
            .into_iter()
            .map(|p| self.order[p])
            .collect()
    }

    /// Reordered positions of noise elements, ascending.
    pub fn noise_positions(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&p| self.labels[self.order[p]] == NOISE)
            .collect()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn clustered_count(&self) -> usize {
        self.n() - self.noise_count()
    }

    pub fn noise_fraction(&self) -> f64 {
        self.noise_count() as f64 / self.n() as f64
    }

    pub(crate) fn with_clusters(&self, clusters: Vec<Cluster>) -> Result<Self> {
        ClusterSet::new(self.order.clone(), clusters)
    }
}

/// Maximal runs of window positions whose statistic is below `threshold`.
/// Runs shorter than `min_size` are dropped.
pub fn threshold_runs(profile: &DeltaProfile, threshold: f64, min_size: usize) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut begin = None;
    for (p, v) in profile.iter() {
        match (v < threshold, begin) {
            (true, None) => begin = Some(p),
            (false, Some(b)) => {
                runs.push(b..p);
                begin = None;
            }
            _ => {}
        }
    }
    if let Some(b) = begin {
        runs.push(b..*profile.window().end() + 1);
    }
    runs.retain(|r| r.len() >= min_size);
    runs
}

/// Clusters formed by the positions whose statistic lies strictly below `threshold`.
pub fn extract_clusters_at(
    profile: &DeltaProfile,
    order: &[usize],
    threshold: f64,
    min_size: usize,
) -> Result<ClusterSet> {
    if !threshold.is_finite() {
        return Err(Error::param("threshold", "must be finite"));
    }
    if min_size < 2 {
        return Err(Error::param("min_size", format!("must be at least 2, got {min_size}")));
    }
    if order.len() != profile.n() {
        return Err(Error::param("order", "length differs from the profile"));
    }
    let clusters = threshold_runs(profile, threshold, min_size)
        .into_iter()
        .map(Cluster::from_range)
        .collect();
    ClusterSet::new(order.to_vec(), clusters)
}

/// How a partition is scored during the threshold scan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFunction {
    /// Sum over clusters of size / variance.
    #[default]
    SizeOverVar,
    /// Sum over clusters of 1 / variance; for profiles where size dominates and the score
    /// curve never peaks.
    InverseVar,
}

impl fmt::Display for ScoreFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreFunction::SizeOverVar => "size_over_var",
            ScoreFunction::InverseVar => "inverse_var",
        })
    }
}

impl FromStr for ScoreFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size_over_var" | "1" => Ok(ScoreFunction::SizeOverVar),
            "inverse_var" | "2" => Ok(ScoreFunction::InverseVar),
            other => Err(Error::param("score_function", format!("unknown function {other:?}"))),
        }
    }
}

/// Count, sum and sum of squares of the pairwise distances inside a set of positions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairMoments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl PairMoments {
    /// Over all pairs `a < b` of `positions` (rows and columns of `pm`).
    pub fn over(pm: &DistanceMatrix, positions: &[usize]) -> Self {
        let n = pm.n();
        fn acc<T: Scalar>(v: &[T], n: usize, positions: &[usize]) -> PairMoments {
            let mut m = PairMoments::default();
            for (x, &a) in positions.iter().enumerate() {
                let row = &v[a * n..(a + 1) * n];
                for &b in &positions[x + 1..] {
                    let d = row[b].to_f64();
                    m.sum += d;
                    m.sum_sq += d * d;
                }
            }
            let k = positions.len() as u64;
            m.count = k * k.saturating_sub(1) / 2;
            m
        }
        with_storage!(pm, v => acc(v, n, positions))
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Population variance of the distances, floored at `1e-12 * mean` (or `1e-12` when
    /// the mean is zero) so duplicate-heavy clusters keep a finite score.
    pub fn floored_variance(&self) -> f64 {
        let mean = self.mean();
        let var = if self.count == 0 {
            0.0
        } else {
            self.sum_sq / self.count as f64 - mean * mean
        };
        let floor = 1e-12 * if mean > 0.0 { mean } else { 1.0 };
        var.max(floor)
    }
}

fn cluster_term(f: ScoreFunction, size: usize, m: &PairMoments) -> f64 {
    let var = m.floored_variance();
    match f {
        ScoreFunction::SizeOverVar => size as f64 / var,
        ScoreFunction::InverseVar => 1.0 / var,
    }
}

/// Partition score of `cs` over the permuted matrix `pm`; zero for an empty partition.
pub fn score_partition(cs: &ClusterSet, pm: &DistanceMatrix, f: ScoreFunction) -> f64 {
    cs.clusters()
        .iter()
        .map(|c| {
            let positions = c.positions();
            cluster_term(f, positions.len(), &PairMoments::over(pm, &positions))
        })
        .sum()
}

/// Parameters of the threshold scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanParams {
    pub min_size_pct: f64,
    pub n_candidates: usize,
    pub use_all_cutoff: bool,
    pub score_function: ScoreFunction,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            min_size_pct: DEFAULT_MIN_SIZE_PCT,
            n_candidates: DEFAULT_CANDIDATES,
            use_all_cutoff: true,
            score_function: ScoreFunction::SizeOverVar,
        }
    }
}

/// `max(2, round(pct / 100 * n))`.
pub fn min_size_elements(min_size_pct: f64, n: usize) -> Result<usize> {
    if !(min_size_pct.is_finite() && min_size_pct >= 0.0) {
        return Err(Error::param("min_size_pct", format!("must be nonnegative, got {min_size_pct}")));
    }
    Ok(((min_size_pct / 100.0 * n as f64).round() as usize).max(2))
}

/// Scores of every candidate threshold and the chosen one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffScan {
    pub candidates: Vec<f64>,
    pub scores: Vec<f64>,
    pub n_clusters: Vec<usize>,
    /// Candidates below this index were excluded from the argmax.
    pub first_eligible: usize,
    pub chosen: f64,
    /// Index of the chosen candidate; `None` once a user override is applied.
    pub chosen_index: Option<usize>,
    pub overridden: bool,
    pub min_size_elements: usize,
    pub score_function: ScoreFunction,
}

/// Evenly spaced thresholds over `[lo, hi]`, endpoints included.
pub fn candidate_thresholds(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if hi <= lo || count < 2 {
        return vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    let mut v: Vec<f64> = (0..count).map(|k| lo + step * k as f64).collect();
    v[count - 1] = hi;
    v
}

/// Tries every candidate threshold and keeps the one with the largest partition score
/// (ties go to the smallest threshold).
pub fn scan_cutoffs(profile: &DeltaProfile, pm: &DistanceMatrix, params: &ScanParams) -> Result<CutoffScan> {
    if params.n_candidates == 0 {
        return Err(Error::param("n_candidates", "must be at least 1"));
    }
    if pm.n() != profile.n() {
        return Err(Error::param("profile", "element count differs from the matrix"));
    }
    let min_size = min_size_elements(params.min_size_pct, profile.n())?;
    let (lo, hi) = (profile.min(), profile.max());
    let candidates = candidate_thresholds(lo, hi, params.n_candidates);
    let first_eligible = if params.use_all_cutoff || candidates.len() == 1 {
        0
    } else {
        let floor = lo + LOW_CUTOFF_EXCLUSION * (hi - lo);
        candidates.iter().position(|&c| c >= floor).unwrap_or(0)
    };

    let mut memo: HashMap<(usize, usize), PairMoments> = HashMap::new();
    let mut scores = Vec::with_capacity(candidates.len());
    let mut n_clusters = Vec::with_capacity(candidates.len());
    for &t in &candidates {
        let runs = threshold_runs(profile, t, min_size);
        let score: f64 = runs
            .iter()
            .map(|r| {
                let m = memo.entry((r.start, r.end)).or_insert_with(|| {
                    let positions: Vec<usize> = r.clone().collect();
                    PairMoments::over(pm, &positions)
                });
                cluster_term(params.score_function, r.len(), m)
            })
            .sum();
        // an empty sum is -0.0; store +0.0 so exports read "0"
        scores.push(score + 0.0);
        n_clusters.push(runs.len());
    }

    let mut best = first_eligible;
    for k in first_eligible + 1..candidates.len() {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    Ok(CutoffScan {
        chosen: candidates[best],
        chosen_index: Some(best),
        candidates,
        scores,
        n_clusters,
        first_eligible,
        overridden: false,
        min_size_elements: min_size,
        score_function: params.score_function,
    })
}

/// Replaces the chosen threshold, keeping candidates and scores.
pub fn override_cutoff(scan: &CutoffScan, threshold: f64) -> Result<CutoffScan> {
    if !threshold.is_finite() {
        return Err(Error::param("threshold", "must be finite"));
    }
    Ok(CutoffScan {
        chosen: threshold,
        chosen_index: None,
        overridden: true,
        ..scan.clone()
    })
}
