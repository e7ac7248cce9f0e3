//! End-to-end driver: reorder, profile, scan, cut, merge, expand.
//!
//! Each stage is a plain function so callers (the CLI stages, the session service and
//! [`autopilot`]) compose the same code and produce identical results.

use serde::{Deserialize, Serialize};

use crate::delta::{compute_delta_profile, delta_profile_for_order, DeltaProfile, Stencil, DEFAULT_STENCIL_PCT};
use crate::error::Result;
use crate::matrix::DistanceMatrix;
use crate::refine::{
    all_cluster_stats, expand_clusters, merge_pairs, propose_merges, ClusterStats, Expansion, MergeOrder,
    MergePlan, DEFAULT_ALPHA, DEFAULT_BETA,
};
use crate::reorder::{enumerate_starts, reorder_from, select_best_start, Execution, Reordering, StartStrategy};
use crate::segment::{
    extract_clusters_at, override_cutoff, scan_cutoffs, ClusterSet, CutoffScan, ScanParams, ScoreFunction,
    DEFAULT_CANDIDATES, DEFAULT_MIN_SIZE_PCT,
};

/// Every tunable of a run. Field defaults are the engine defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub stencil_pct: f64,
    pub starts: StartStrategy,
    pub min_size_pct: f64,
    pub n_candidates: usize,
    pub use_all_cutoff: bool,
    pub score_function: ScoreFunction,
    /// Replaces the scanned cutoff when set.
    pub cutoff: Option<f64>,
    pub alpha: f64,
    pub merge_order: MergeOrder,
    /// Replaces the proposed merge list when set.
    pub merge_edits: Option<Vec<(usize, usize)>>,
    pub beta: f64,
    pub keep_no_noise: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            stencil_pct: DEFAULT_STENCIL_PCT,
            starts: StartStrategy::All,
            min_size_pct: DEFAULT_MIN_SIZE_PCT,
            n_candidates: DEFAULT_CANDIDATES,
            use_all_cutoff: true,
            score_function: ScoreFunction::SizeOverVar,
            cutoff: None,
            alpha: DEFAULT_ALPHA,
            merge_order: MergeOrder::MostNeighborsFirst,
            merge_edits: None,
            beta: DEFAULT_BETA,
            keep_no_noise: false,
        }
    }
}

impl Config {
    pub fn stencil(&self, n: usize) -> Result<Stencil> {
        Stencil::from_percent(self.stencil_pct, n)
    }

    pub fn scan_params(&self) -> ScanParams {
        ScanParams {
            min_size_pct: self.min_size_pct,
            n_candidates: self.n_candidates,
            use_all_cutoff: self.use_all_cutoff,
            score_function: self.score_function,
        }
    }

    pub fn expansion(&self) -> Expansion {
        Expansion {
            beta: self.beta,
            keep_no_noise: self.keep_no_noise,
        }
    }
}

/// Clusters found on one ordering at the scanned (or overridden) cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    pub permuted: DistanceMatrix,
    pub profile: DeltaProfile,
    pub scan: CutoffScan,
    pub clusters: ClusterSet,
}

/// Profile, scan and cut for a given order.
pub fn segment(m: &DistanceMatrix, order: &[usize], cfg: &Config) -> Result<Segmentation> {
    let permuted = m.permuted(order)?;
    let profile = compute_delta_profile(&permuted, cfg.stencil(m.n())?)?;
    cut(permuted, order, profile, cfg)
}

/// Scan and cut for an already computed profile.
pub fn cut(permuted: DistanceMatrix, order: &[usize], profile: DeltaProfile, cfg: &Config) -> Result<Segmentation> {
    let mut scan = scan_cutoffs(&profile, &permuted, &cfg.scan_params())?;
    if let Some(t) = cfg.cutoff {
        scan = override_cutoff(&scan, t)?;
    }
    let clusters = extract_clusters_at(&profile, order, scan.chosen, scan.min_size_elements)?;
    Ok(Segmentation {
        permuted,
        profile,
        scan,
        clusters,
    })
}

/// Chain from element 0, then from every start of `cfg.starts`; keeps the ordering with
/// the smallest stencil integral (ties to the smaller start).
pub fn choose_reordering(m: &DistanceMatrix, cfg: &Config, execution: Execution) -> Result<Reordering> {
    let stencil = cfg.stencil(m.n())?;
    let first = reorder_from(m, 0, stencil)?;
    let first_pass = match cfg.starts {
        StartStrategy::CentroidsOfFirstPass => {
            let seg = segment(m, &first.order, &Config { cutoff: None, ..cfg.clone() })?;
            Some(seg.clusters)
        }
        _ => None,
    };
    let starts = enumerate_starts(&cfg.starts, m, first_pass.as_ref())?;
    let best = select_best_start(m, &starts, stencil, execution)?;
    let keep_first = first.delta_integral < best.delta_integral
        || (first.delta_integral == best.delta_integral && first.start < best.start);
    Ok(if keep_first { first } else { best })
}

/// Proposes merges and applies them (or the user's edited list from `cfg.merge_edits`).
pub fn merge(permuted: &DistanceMatrix, cut: &ClusterSet, cfg: &Config) -> Result<(MergePlan, ClusterSet)> {
    let plan = propose_merges(permuted, cut, cfg.alpha, cfg.merge_order)?;
    let pairs = cfg.merge_edits.as_deref().unwrap_or(&plan.pairs);
    let merged = merge_pairs(cut, pairs)?;
    Ok((plan, merged))
}

/// Expands `merged` using its own statistics.
pub fn expand(
    m: &DistanceMatrix,
    permuted: &DistanceMatrix,
    merged: &ClusterSet,
    rule: Expansion,
) -> Result<(Vec<ClusterStats>, ClusterSet)> {
    let stats = all_cluster_stats(permuted, merged)?;
    let expanded = expand_clusters(m, merged, &stats, rule)?;
    Ok((stats, expanded))
}

/// Everything a full run produces.
#[derive(Clone, Debug)]
pub struct Run {
    pub reordering: Reordering,
    pub segmentation: Segmentation,
    pub merge_plan: MergePlan,
    pub merged: ClusterSet,
    pub stats: Vec<ClusterStats>,
    pub expanded: ClusterSet,
}

impl Run {
    pub fn summary(&self) -> Summary {
        Summary {
            n: self.merged.n(),
            best_start: self.reordering.start,
            delta_integral: self.reordering.delta_integral,
            cutoff: self.segmentation.scan.chosen,
            clusters_before_merge: self.segmentation.clusters.n_clusters(),
            clusters: self.merged.n_clusters(),
            noise_before_expansion: self.merged.noise_fraction(),
            noise: self.expanded.noise_fraction(),
        }
    }
}

/// Headline numbers of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub best_start: usize,
    pub delta_integral: f64,
    pub cutoff: f64,
    pub clusters_before_merge: usize,
    pub clusters: usize,
    pub noise_before_expansion: f64,
    pub noise: f64,
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "elements:            {}", self.n)?;
        writeln!(f, "best start:          {} (integral {})", self.best_start, self.delta_integral)?;
        writeln!(f, "cutoff:              {}", self.cutoff)?;
        writeln!(f, "clusters:            {} ({} before merging)", self.clusters, self.clusters_before_merge)?;
        writeln!(f, "noise before expand: {:.1}%", 100.0 * self.noise_before_expansion)?;
        write!(f, "noise:               {:.1}%", 100.0 * self.noise)
    }
}

/// Runs every stage with `cfg`.
pub fn autopilot(m: &DistanceMatrix, cfg: &Config, execution: Execution) -> Result<Run> {
    let reordering = choose_reordering(m, cfg, execution)?;
    let segmentation = segment(m, &reordering.order, cfg)?;
    let (merge_plan, merged) = merge(&segmentation.permuted, &segmentation.clusters, cfg)?;
    let (stats, expanded) = expand(m, &segmentation.permuted, &merged, cfg.expansion())?;
    Ok(Run {
        reordering,
        segmentation,
        merge_plan,
        merged,
        stats,
        expanded,
    })
}

/// Integral of the stencil statistic for `order`, computed without the permuted copy.
pub fn order_integral(m: &DistanceMatrix, order: &[usize], cfg: &Config) -> Result<f64> {
    Ok(delta_profile_for_order(m, order, cfg.stencil(m.n())?)?.integral())
}
