//! Cluster statistics, merging, noise expansion and inter-cluster proximity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{with_storage, DistanceMatrix, Scalar};
use crate::reorder::inverse_permutation;
use crate::segment::{Cluster, ClusterSet, NOISE};

/// Default merge threshold multiplier (alpha).
pub const DEFAULT_ALPHA: f64 = 1.0;
/// Default expansion threshold multiplier (beta).
pub const DEFAULT_BETA: f64 = 1.0;

/// Size, mean and population standard deviation of the intra-cluster distances, and the
/// medoid (an original index).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub size: usize,
    pub mu: f64,
    pub sigma: f64,
    pub medoid: usize,
}

/// Index `k` of `items` minimising `sum_b dist(items[k], items[b])`; ties go to the
/// smallest `key(items[k])`.
fn argmin_total<F, K>(items: &[usize], dist: F, key: K) -> usize
where
    F: Fn(usize, usize) -> f64,
    K: Fn(usize) -> usize,
{
    let mut best = 0;
    let mut best_total = f64::INFINITY;
    for (k, &a) in items.iter().enumerate() {
        let total: f64 = items.iter().map(|&b| dist(a, b)).sum();
        if total < best_total || (total == best_total && key(a) < key(items[best])) {
            best = k;
            best_total = total;
        }
    }
    best
}

/// Member of `members` (original indices) with the smallest summed distance to the others.
pub fn medoid(m: &DistanceMatrix, members: &[usize]) -> usize {
    assert!(!members.is_empty(), "medoid of an empty set");
    let n = m.n();
    let k = with_storage!(m, v => argmin_total(members, |a, b| v[a * n + b].to_f64(), |a| a));
    members[k]
}

/// Statistics of cluster `j` (all members, including expanded ones) over the permuted
/// matrix `pm`.
pub fn cluster_stats(pm: &DistanceMatrix, cs: &ClusterSet, j: usize) -> Result<ClusterStats> {
    let positions = cs.cluster(j)?.positions();
    if positions.len() < 2 {
        return Err(Error::param("cluster", format!("cluster {j} has fewer than 2 members")));
    }
    let n = pm.n();
    let order = cs.order();
    with_storage!(pm, v => {
        let at = |a: usize, b: usize| v[a * n + b].to_f64();
        let mut count = 0usize;
        let mut sum = 0.0;
        for (x, &a) in positions.iter().enumerate() {
            for &b in &positions[x + 1..] {
                sum += at(a, b);
                count += 1;
            }
        }
        let mu = sum / count as f64;
        let mut ss = 0.0;
        for (x, &a) in positions.iter().enumerate() {
            for &b in &positions[x + 1..] {
                let d = at(a, b) - mu;
                ss += d * d;
            }
        }
        let k = argmin_total(&positions, at, |p| order[p]);
        Ok(ClusterStats {
            size: positions.len(),
            mu,
            sigma: (ss / count as f64).sqrt(),
            medoid: order[positions[k]],
        })
    })
}

pub fn all_cluster_stats(pm: &DistanceMatrix, cs: &ClusterSet) -> Result<Vec<ClusterStats>> {
    (0..cs.n_clusters()).map(|j| cluster_stats(pm, cs, j)).collect()
}

/// Mean of `pm` over the block `rows x cols`.
fn block_mean(pm: &DistanceMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    let n = pm.n();
    let sum: f64 = with_storage!(pm, v => {
        let mut s = 0.0;
        for &a in rows {
            let row = &v[a * n..(a + 1) * n];
            for &b in cols {
                s += row[b].to_f64();
            }
        }
        s
    });
    sum / (rows.len() * cols.len()) as f64
}

/// Per-cluster statistics plus the mean of every off-diagonal zone between two clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneTable {
    pub stats: Vec<ClusterStats>,
    /// `mean_off[a][b]`: mean distance between members of clusters `a` and `b`; the
    /// diagonal holds each cluster's `mu`.
    pub mean_off: Vec<Vec<f64>>,
}

impl ZoneTable {
    pub fn n_clusters(&self) -> usize {
        self.stats.len()
    }

    /// Comma-separated rendering: one row per ordered cluster pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cluster_a,cluster_b,size_a,size_b,mu_a,sigma_a,mean_off\n");
        for (a, sa) in self.stats.iter().enumerate() {
            for (b, sb) in self.stats.iter().enumerate() {
                out.push_str(&format!(
                    "{a},{b},{},{},{},{},{}\n",
                    sa.size, sb.size, sa.mu, sa.sigma, self.mean_off[a][b]
                ));
            }
        }
        out
    }
}

/// Builds the zone table. Clusters need at least two members each.
pub fn zone_table(pm: &DistanceMatrix, cs: &ClusterSet) -> Result<ZoneTable> {
    let stats = all_cluster_stats(pm, cs)?;
    let positions: Vec<Vec<usize>> = cs.clusters().iter().map(Cluster::positions).collect();
    let p = positions.len();
    let mut mean_off = vec![vec![0.0; p]; p];
    for a in 0..p {
        mean_off[a][a] = stats[a].mu;
        for b in a + 1..p {
            let v = block_mean(pm, &positions[a], &positions[b]);
            mean_off[a][b] = v;
            mean_off[b][a] = v;
        }
    }
    Ok(ZoneTable { stats, mean_off })
}

/// Which cluster gets to absorb its neighbours first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeOrder {
    SmallestFirst,
    LargestFirst,
    #[default]
    MostNeighborsFirst,
    FewestNeighborsFirst,
}

impl fmt::Display for MergeOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeOrder::SmallestFirst => "smallest_first",
            MergeOrder::LargestFirst => "largest_first",
            MergeOrder::MostNeighborsFirst => "most_neighbors_first",
            MergeOrder::FewestNeighborsFirst => "fewest_neighbors_first",
        })
    }
}

impl FromStr for MergeOrder {
    type Err = Error;

    /// Names or the numeric options `1`..`4`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smallest_first" | "1" => Ok(MergeOrder::SmallestFirst),
            "largest_first" | "2" => Ok(MergeOrder::LargestFirst),
            "most_neighbors_first" | "3" => Ok(MergeOrder::MostNeighborsFirst),
            "fewest_neighbors_first" | "4" => Ok(MergeOrder::FewestNeighborsFirst),
            other => Err(Error::param("order_rule", format!("unknown merge order {other:?}"))),
        }
    }
}

/// Proposed `(absorber, absorbed)` pairs, in the order they were decided.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergePlan {
    pub pairs: Vec<(usize, usize)>,
    pub order_rule: MergeOrder,
    pub alpha: f64,
    /// Clusters in the order they were considered as absorbers.
    pub processing_order: Vec<usize>,
    /// Number of clusters each cluster would absorb on its own.
    pub neighbors: Vec<usize>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Joins the sets of `a` and `b`; the smaller root becomes the representative.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.0[hi] = lo;
    }
}

/// Decides merges from a zone table: `b` joins `a` when the mean distance between them is
/// below `mu_a + alpha * sigma_a`. Clusters act as absorbers in `order_rule` order; a
/// cluster that was already absorbed is represented by its absorber and does not test on
/// its own. Absorbing a member of another group joins the whole group.
pub fn plan_merges(table: &ZoneTable, alpha: f64, order_rule: MergeOrder) -> Result<MergePlan> {
    if !alpha.is_finite() {
        return Err(Error::param("alpha", "must be finite"));
    }
    let p = table.n_clusters();
    let absorbs = |a: usize, b: usize| {
        a != b && table.mean_off[a][b] < table.stats[a].mu + alpha * table.stats[a].sigma
    };
    let neighbors: Vec<usize> = (0..p).map(|a| (0..p).filter(|&b| absorbs(a, b)).count()).collect();
    let mut processing_order: Vec<usize> = (0..p).collect();
    let size = |a: usize| table.stats[a].size;
    match order_rule {
        MergeOrder::SmallestFirst => processing_order.sort_by_key(|&a| (size(a), a)),
        MergeOrder::LargestFirst => processing_order.sort_by_key(|&a| (std::cmp::Reverse(size(a)), a)),
        MergeOrder::MostNeighborsFirst => {
            processing_order.sort_by_key(|&a| (std::cmp::Reverse(neighbors[a]), a))
        }
        MergeOrder::FewestNeighborsFirst => processing_order.sort_by_key(|&a| (neighbors[a], a)),
    }

    let mut groups = UnionFind::new(p);
    let mut absorbed = vec![false; p];
    let mut pairs = Vec::new();
    for &a in &processing_order {
        if absorbed[a] {
            continue;
        }
        for b in 0..p {
            if absorbs(a, b) && groups.find(a) != groups.find(b) {
                groups.union(a, b);
                absorbed[b] = true;
                pairs.push((a, b));
            }
        }
    }
    Ok(MergePlan {
        pairs,
        order_rule,
        alpha,
        processing_order,
        neighbors,
    })
}

/// Zone table plus [`plan_merges`]. Fewer than two clusters give an empty plan.
pub fn propose_merges(
    pm: &DistanceMatrix,
    cs: &ClusterSet,
    alpha: f64,
    order_rule: MergeOrder,
) -> Result<MergePlan> {
    let table = zone_table(pm, cs)?;
    plan_merges(&table, alpha, order_rule)
}

/// Merges the clusters connected by `plan` (or by `user_edits`, which replace the plan
/// when given). Resulting clusters are numbered by their first reordered position.
pub fn apply_merges(
    cs: &ClusterSet,
    plan: &MergePlan,
    user_edits: Option<&[(usize, usize)]>,
) -> Result<ClusterSet> {
    let pairs = user_edits.unwrap_or(&plan.pairs);
    merge_pairs(cs, pairs)
}

/// Merges the clusters connected by `pairs`.
pub fn merge_pairs(cs: &ClusterSet, pairs: &[(usize, usize)]) -> Result<ClusterSet> {
    let p = cs.n_clusters();
    let mut groups = UnionFind::new(p);
    for &(a, b) in pairs {
        for id in [a, b] {
            if id >= p {
                return Err(Error::UnknownCluster { id, available: p });
            }
        }
        groups.union(a, b);
    }
    let mut merged: Vec<Option<Cluster>> = vec![None; p];
    for (j, c) in cs.clusters().iter().enumerate() {
        let root = groups.find(j);
        let slot = merged[root].get_or_insert_with(Cluster::default);
        slot.ranges.extend(c.ranges.iter().cloned());
        slot.expanded.extend_from_slice(&c.expanded);
    }
    let mut clusters: Vec<Cluster> = merged
        .into_iter()
        .flatten()
        .map(|mut c| {
            c.ranges.sort_by_key(|r| r.start);
            c.expanded.sort_unstable();
            c
        })
        .collect();
    clusters.sort_by_key(|c| c.positions()[0]);
    cs.with_clusters(clusters)
}

/// How far noise elements may be from a cluster medoid to join it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Expansion {
    pub beta: f64,
    /// Assign every noise element to its closest cluster (equivalent to infinite beta).
    pub keep_no_noise: bool,
}

impl Default for Expansion {
    fn default() -> Self {
        Expansion {
            beta: DEFAULT_BETA,
            keep_no_noise: false,
        }
    }
}

/// Assigns each noise element to its closest cluster (by distance to the medoid) when
/// that distance is below `mu + beta * sigma`. Statistics are those of the clusters before
/// expansion; new members are recorded as label-only `expanded` positions.
pub fn expand_clusters(
    m: &DistanceMatrix,
    cs: &ClusterSet,
    stats: &[ClusterStats],
    rule: Expansion,
) -> Result<ClusterSet> {
    if rule.beta.is_nan() {
        return Err(Error::param("beta", "must not be NaN"));
    }
    if stats.len() != cs.n_clusters() {
        return Err(Error::param("stats", "one entry per cluster is required"));
    }
    if stats.is_empty() {
        return Ok(cs.clone());
    }
    let unconditional = rule.keep_no_noise || rule.beta == f64::INFINITY;
    let positions = inverse_permutation(cs.order());
    let mut clusters = cs.clusters().to_vec();
    for (e, &label) in cs.labels().iter().enumerate() {
        if label != NOISE {
            continue;
        }
        let mut best = 0;
        let mut best_d = m.get(e, stats[0].medoid);
        for (j, st) in stats.iter().enumerate().skip(1) {
            let d = m.get(e, st.medoid);
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        let st = &stats[best];
        if unconditional || best_d < st.mu + rule.beta * st.sigma {
            clusters[best].expanded.push(positions[e]);
        }
    }
    for c in &mut clusters {
        c.expanded.sort_unstable();
    }
    cs.with_clusters(clusters)
}

/// Closest other cluster of every cluster, and the pairs that are each other's closest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearestMap {
    pub nearest: Vec<usize>,
    pub mutual: Vec<(usize, usize)>,
}

/// Nearest neighbours from a matrix of mean inter-cluster distances (diagonal ignored,
/// ties to the smallest id).
pub fn nearest_from_mean_off(mean_off: &[Vec<f64>]) -> NearestMap {
    let p = mean_off.len();
    if p < 2 {
        return NearestMap {
            nearest: Vec::new(),
            mutual: Vec::new(),
        };
    }
    let nearest: Vec<usize> = (0..p)
        .map(|a| {
            (0..p)
                .filter(|&b| b != a)
                .fold(None, |best: Option<usize>, b| match best {
                    Some(c) if mean_off[a][c] <= mean_off[a][b] => Some(c),
                    _ => Some(b),
                })
                .expect("at least two clusters")
        })
        .collect();
    let mutual = (0..p)
        .filter(|&a| nearest[a] > a && nearest[nearest[a]] == a)
        .map(|a| (a, nearest[a]))
        .collect();
    NearestMap { nearest, mutual }
}

pub fn nearest_cluster_map(pm: &DistanceMatrix, cs: &ClusterSet) -> Result<NearestMap> {
    Ok(nearest_from_mean_off(&zone_table(pm, cs)?.mean_off))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Precision;

    fn stats(size: usize, mu: f64, sigma: f64) -> ClusterStats {
        ClusterStats {
            size,
            mu,
            sigma,
            medoid: 0,
        }
    }

    fn table(stats: Vec<ClusterStats>, mean_off: Vec<Vec<f64>>) -> ZoneTable {
        ZoneTable { stats, mean_off }
    }

    #[test]
    fn stats_by_hand() {
        let pm = DistanceMatrix::from_rows(
            &[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]],
            Precision::F64,
        )
        .unwrap();
        let cs = ClusterSet::new(vec![0, 1, 2], vec![Cluster::from_range(0..3)]).unwrap();
        let s = cluster_stats(&pm, &cs, 0).unwrap();
        assert_eq!(s.size, 3);
        assert!((s.mu - 4.0 / 3.0).abs() < 1e-12);
        assert!((s.sigma - (2.0f64 / 9.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.medoid, 0);
    }

    #[test]
    fn stats_pair_and_constant() {
        let pm = DistanceMatrix::from_upper(3, Precision::F64, |_, _| 5.0).unwrap();
        let cs = ClusterSet::new(vec![2, 1, 0], vec![Cluster::from_range(0..2)]).unwrap();
        let s = cluster_stats(&pm, &cs, 0).unwrap();
        assert_eq!((s.size, s.mu, s.sigma, s.medoid), (2, 5.0, 0.0, 1));
        let cs = ClusterSet::new(vec![2, 1, 0], vec![Cluster::from_range(0..3)]).unwrap();
        let s = cluster_stats(&pm, &cs, 0).unwrap();
        assert_eq!((s.mu, s.sigma, s.medoid), (5.0, 0.0, 0));
        assert!(cluster_stats(&pm, &cs, 1).is_err());
    }

    #[test]
    fn merge_rule_threshold() {
        let t = table(
            vec![stats(10, 5.0, 1.0), stats(10, 5.0, 1.0)],
            vec![vec![5.0, 3.0], vec![3.0, 5.0]],
        );
        assert_eq!(plan_merges(&t, 1.0, MergeOrder::default()).unwrap().pairs, vec![(0, 1)]);
        let t = table(
            vec![stats(10, 5.0, 1.0), stats(10, 5.0, 1.0)],
            vec![vec![5.0, 7.0], vec![7.0, 5.0]],
        );
        assert!(plan_merges(&t, 1.0, MergeOrder::default()).unwrap().pairs.is_empty());
    }

    #[test]
    fn merge_is_asymmetric() {
        // A absorbs B (4 < 5 + 0) but B would not absorb A (4 >= 2 + 1).
        let t = table(
            vec![stats(10, 5.0, 0.0), stats(20, 2.0, 1.0)],
            vec![vec![5.0, 4.0], vec![4.0, 2.0]],
        );
        let plan = plan_merges(&t, 1.0, MergeOrder::LargestFirst).unwrap();
        assert_eq!(plan.processing_order, vec![1, 0]);
        assert_eq!(plan.neighbors, vec![1, 0]);
        assert_eq!(plan.pairs, vec![(0, 1)]);
        let plan = plan_merges(&t, 1.0, MergeOrder::MostNeighborsFirst).unwrap();
        assert_eq!(plan.processing_order, vec![0, 1]);
        assert_eq!(plan.pairs, vec![(0, 1)]);
    }

    #[test]
    fn absorbed_clusters_do_not_absorb() {
        // 0 absorbs 1; 1 alone would absorb 2, but 1 is represented by 0 which does not.
        let t = table(
            vec![stats(10, 5.0, 0.0), stats(10, 5.0, 0.0), stats(10, 1.0, 0.0)],
            vec![vec![5.0, 4.0, 9.0], vec![4.0, 5.0, 3.0], vec![9.0, 3.0, 1.0]],
        );
        let plan = plan_merges(&t, 1.0, MergeOrder::SmallestFirst).unwrap();
        assert_eq!(plan.pairs, vec![(0, 1)]);
        // an unabsorbed cluster that reaches a group member joins the whole group
        let t = table(
            vec![stats(10, 5.0, 0.0), stats(10, 1.0, 0.0), stats(10, 5.0, 0.0)],
            vec![vec![5.0, 4.0, 9.0], vec![4.0, 1.0, 9.0], vec![9.0, 3.0, 5.0]],
        );
        let plan = plan_merges(&t, 1.0, MergeOrder::SmallestFirst).unwrap();
        assert_eq!(plan.pairs, vec![(0, 1), (2, 1)]);
    }

    fn twelve() -> ClusterSet {
        let clusters = (0..12).map(|k| Cluster::from_range(k * 3..k * 3 + 2)).collect();
        ClusterSet::new((0..36).collect(), clusters).unwrap()
    }

    #[test]
    fn twelve_clusters_merge_to_seven() {
        // groups {1,2,3,4,7} and {5,6} in one-based numbering
        let edits = [(0, 1), (0, 2), (0, 3), (0, 6), (4, 5)];
        let cs = merge_pairs(&twelve(), &edits).unwrap();
        assert_eq!(cs.n_clusters(), 7);
        assert_eq!(cs.clusters()[0].ranges, vec![0..2, 3..5, 6..8, 9..11, 18..20]);
        assert_eq!(cs.clusters()[1].ranges, vec![12..14, 15..17]);
        assert_eq!(cs.clustered_count(), twelve().clustered_count());
    }

    #[test]
    fn empty_and_total_merges() {
        let cs = twelve();
        assert_eq!(merge_pairs(&cs, &[]).unwrap(), cs);
        let all: Vec<(usize, usize)> = (1..12).map(|b| (0, b)).collect();
        let one = merge_pairs(&cs, &all).unwrap();
        assert_eq!(one.n_clusters(), 1);
        assert_eq!(one.clustered_count(), 24);
        assert!(matches!(
            merge_pairs(&cs, &[(0, 12)]),
            Err(Error::UnknownCluster { id: 12, .. })
        ));
    }

    #[test]
    fn user_edits_replace_plan() {
        let cs = twelve();
        let plan = MergePlan {
            pairs: vec![(0, 1)],
            order_rule: MergeOrder::default(),
            alpha: 1.0,
            processing_order: vec![],
            neighbors: vec![],
        };
        assert_eq!(apply_merges(&cs, &plan, None).unwrap().n_clusters(), 11);
        let edited = apply_merges(&cs, &plan, Some(&[(2, 3), (4, 5)])).unwrap();
        assert_eq!(edited.n_clusters(), 10);
        assert_eq!(edited.clusters()[0].ranges, vec![0..2]);
    }

    fn line_matrix() -> DistanceMatrix {
        // points on a line
        let x = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0, 2.5, 6.0];
        DistanceMatrix::from_upper(8, Precision::F64, |i, j| f64::abs(x[i] - x[j])).unwrap()
    }

    #[test]
    fn expansion_rules() {
        let m = line_matrix();
        let cs = ClusterSet::new(
            (0..8).collect(),
            vec![Cluster::from_range(0..3), Cluster::from_range(3..6)],
        )
        .unwrap();
        let st: Vec<ClusterStats> = (0..2).map(|j| cluster_stats(&m, &cs, j).unwrap()).collect();
        // cluster 0: distances {1,2,1}, mu 4/3; medoid 1. Element 6 sits 1.5 from it.
        assert_eq!(st[0].medoid, 1);
        let strict = expand_clusters(&m, &cs, &st, Expansion { beta: 0.0, keep_no_noise: false }).unwrap();
        assert_eq!(strict.labels()[6], NOISE);
        let loose = expand_clusters(&m, &cs, &st, Expansion { beta: 1.0, keep_no_noise: false }).unwrap();
        // 1.5 < 4/3 + sqrt(2/9)
        assert_eq!(loose.labels()[6], 0);
        assert_eq!(loose.labels()[7], NOISE);
        assert_eq!(loose.clusters()[0].ranges, vec![0..3]);
        assert_eq!(loose.clusters()[0].expanded, vec![6]);
        let all = expand_clusters(&m, &cs, &st, Expansion { beta: 0.0, keep_no_noise: true }).unwrap();
        assert_eq!(all.noise_count(), 0);
        let inf = expand_clusters(&m, &cs, &st, Expansion { beta: f64::INFINITY, keep_no_noise: false }).unwrap();
        assert_eq!(inf.labels(), all.labels());
    }

    #[test]
    fn expansion_boundary_is_strict() {
        // noise element exactly at distance mu from the medoid, sigma 0
        let cs = ClusterSet::new(vec![0, 1, 2], vec![Cluster::from_range(0..2)]).unwrap();
        let m2 = DistanceMatrix::from_rows(
            &[vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 3.0], vec![2.0, 3.0, 0.0]],
            Precision::F64,
        )
        .unwrap();
        let st2 = vec![cluster_stats(&m2, &cs, 0).unwrap()];
        assert_eq!(m2.get(2, st2[0].medoid), st2[0].mu);
        let out = expand_clusters(&m2, &cs, &st2, Expansion { beta: 0.0, keep_no_noise: false }).unwrap();
        assert_eq!(out.labels()[2], NOISE);
    }

    #[test]
    fn nearest_by_hand() {
        let mo = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 2.0],
            vec![5.0, 2.0, 0.0],
        ];
        let map = nearest_from_mean_off(&mo);
        assert_eq!(map.nearest, vec![1, 0, 1]);
        assert_eq!(map.mutual, vec![(0, 1)]);

        let two = nearest_from_mean_off(&[vec![0.0, 3.0], vec![3.0, 0.0]]);
        assert_eq!(two.mutual, vec![(0, 1)]);

        let tie = nearest_from_mean_off(&[
            vec![0.0, 2.0, 2.0],
            vec![2.0, 0.0, 2.0],
            vec![2.0, 2.0, 0.0],
        ]);
        assert_eq!(tie.nearest, vec![1, 0, 0]);
    }

    #[test]
    fn order_rule_names() {
        for (s, r) in [
            ("1", MergeOrder::SmallestFirst),
            ("2", MergeOrder::LargestFirst),
            ("3", MergeOrder::MostNeighborsFirst),
            ("4", MergeOrder::FewestNeighborsFirst),
        ] {
            assert_eq!(s.parse::<MergeOrder>().unwrap(), r);
            assert_eq!(r.to_string().parse::<MergeOrder>().unwrap(), r);
        }
    }
}
