//! Interactive analysis state: a staged pipeline driven by commands, with read-only views
//! for plotting and a replayable history.
//!
//! Stages advance `loaded → reordered → profiled → cut → proposed → merged → expanded`.
//! A command runs when the session has reached the stage it needs; running it discards
//! everything downstream, so a user can go back and change the cutoff or the merges at any
//! time. Replaying [`Session::history`] on the same matrix rebuilds an identical session.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::delta::{compute_delta_profile, DeltaProfile, DEFAULT_STENCIL_PCT};
use crate::error::{Error, Result};
use crate::evaluate::{auto_reorder_columns, confusion_matrix, score_labeling, ColumnMapping, ContingencyTable, ScoreCard};
use crate::export::{labels_csv, ndx, order_text};
use crate::matrix::DistanceMatrix;
use crate::pipeline::{self, Config};
use crate::refine::{
    all_cluster_stats, expand_clusters, merge_pairs, nearest_from_mean_off, plan_merges, zone_table, ClusterStats,
    Expansion, MergeOrder, MergePlan, NearestMap, ZoneTable, DEFAULT_ALPHA,
};
use crate::reorder::{Execution, Reordering, StartStrategy};
use crate::segment::{extract_clusters_at, override_cutoff, scan_cutoffs, ClusterSet, CutoffScan, ScanParams};

/// Version tag carried by every serialized view.
pub const SCHEMA_VERSION: u32 = 1;
/// Edge length of a matrix tile, in pooled cells.
pub const TILE_SIZE: usize = 512;
const MAX_ZOOM: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Loaded,
    Reordered,
    Profiled,
    Cut,
    Proposed,
    Merged,
    Expanded,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Loaded => "loaded",
            Stage::Reordered => "reordered",
            Stage::Profiled => "profiled",
            Stage::Cut => "cut",
            Stage::Proposed => "proposed",
            Stage::Merged => "merged",
            Stage::Expanded => "expanded",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_stencil_pct() -> f64 {
    DEFAULT_STENCIL_PCT
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

/// A state change requested by the user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Reorder {
        #[serde(default)]
        starts: StartStrategy,
        #[serde(default = "default_stencil_pct")]
        stencil_pct: f64,
    },
    /// Recomputes the profile; `stencil_pct` defaults to the one used for reordering.
    Profile {
        #[serde(default)]
        stencil_pct: Option<f64>,
    },
    Scan {
        #[serde(default, flatten)]
        params: ScanParams,
    },
    SetCutoff {
        value: f64,
    },
    ProposeMerges {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default)]
        order_rule: MergeOrder,
    },
    /// Applies the proposal, or `pairs` when given (an edited proposal).
    ApplyMerges {
        #[serde(default)]
        pairs: Option<Vec<(usize, usize)>>,
    },
    Expand {
        #[serde(default, flatten)]
        rule: Expansion,
    },
    /// Drops everything after `stage`.
    Reset {
        stage: Stage,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Reorder { .. } => "reorder",
            Command::Profile { .. } => "profile",
            Command::Scan { .. } => "scan",
            Command::SetCutoff { .. } => "set_cutoff",
            Command::ProposeMerges { .. } => "propose_merges",
            Command::ApplyMerges { .. } => "apply_merges",
            Command::Expand { .. } => "expand",
            Command::Reset { .. } => "reset",
        }
    }

    /// Stage the session must have reached.
    pub fn requires(&self) -> Stage {
        match self {
            Command::Reorder { .. } | Command::Reset { .. } => Stage::Loaded,
            Command::Profile { .. } => Stage::Reordered,
            Command::Scan { .. } => Stage::Profiled,
            Command::SetCutoff { .. } | Command::ProposeMerges { .. } => Stage::Cut,
            Command::ApplyMerges { .. } => Stage::Proposed,
            Command::Expand { .. } => Stage::Merged,
        }
    }
}

#[derive(Clone, Debug)]
struct Reordered {
    stencil_pct: f64,
    reordering: Reordering,
    permuted: DistanceMatrix,
}

#[derive(Clone, Debug)]
struct Proposal {
    plan: MergePlan,
    zones: ZoneTable,
}

/// One analysis over one matrix.
#[derive(Clone, Debug)]
pub struct Session {
    matrix: DistanceMatrix,
    truth: Option<Vec<i64>>,
    execution: Execution,
    history: Vec<Command>,
    config: Config,
    reordered: Option<Reordered>,
    profile: Option<DeltaProfile>,
    scan: Option<CutoffScan>,
    cut: Option<ClusterSet>,
    proposal: Option<Proposal>,
    merged: Option<ClusterSet>,
    expanded: Option<(Vec<ClusterStats>, ClusterSet)>,
}

impl Session {
    /// Starts a session; `truth` labels, when given, enable the confusion view.
    pub fn new(matrix: DistanceMatrix, truth: Option<Vec<i64>>) -> Result<Self> {
        if let Some(t) = &truth {
            if t.len() != matrix.n() {
                return Err(Error::LengthMismatch {
                    truth: t.len(),
                    predicted: matrix.n(),
                });
            }
        }
        Ok(Session {
            matrix,
            truth,
            execution: Execution::default(),
            history: Vec::new(),
            config: Config::default(),
            reordered: None,
            profile: None,
            scan: None,
            cut: None,
            proposal: None,
            merged: None,
            expanded: None,
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Rebuilds a session by applying `history` in order.
    pub fn replay(matrix: DistanceMatrix, truth: Option<Vec<i64>>, history: &[Command]) -> Result<Self> {
        let mut s = Session::new(matrix, truth)?;
        for c in history {
            s.apply(c.clone())?;
        }
        Ok(s)
    }

    pub fn stage(&self) -> Stage {
        if self.expanded.is_some() {
            Stage::Expanded
        } else if self.merged.is_some() {
            Stage::Merged
        } else if self.proposal.is_some() {
            Stage::Proposed
        } else if self.cut.is_some() {
            Stage::Cut
        } else if self.profile.is_some() {
            Stage::Profiled
        } else if self.reordered.is_some() {
            Stage::Reordered
        } else {
            Stage::Loaded
        }
    }

    pub fn matrix(&self) -> &DistanceMatrix {
        &self.matrix
    }

    pub fn truth(&self) -> Option<&[i64]> {
        self.truth.as_deref()
    }

    pub fn history(&self) -> &[Command] {
        &self.history
    }

    /// Parameters in effect, in the form the batch pipeline takes.
    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn reordering(&self) -> Option<&Reordering> {
        self.reordered.as_ref().map(|r| &r.reordering)
    }

    pub fn profile(&self) -> Option<&DeltaProfile> {
        self.profile.as_ref()
    }

    pub fn scan(&self) -> Option<&CutoffScan> {
        self.scan.as_ref()
    }

    pub fn merge_plan(&self) -> Option<&MergePlan> {
        self.proposal.as_ref().map(|p| &p.plan)
    }

    /// The most refined cluster set so far.
    pub fn clusters(&self) -> Option<&ClusterSet> {
        self.expanded
            .as_ref()
            .map(|(_, cs)| cs)
            .or(self.merged.as_ref())
            .or(self.cut.as_ref())
    }

    /// Runs `command`; on error the session is left unchanged.
    pub fn apply(&mut self, command: Command) -> Result<Stage> {
        let current = self.stage();
        let required = command.requires();
        if current < required {
            return Err(Error::StageConflict {
                command: command.name(),
                required: required.as_str(),
                current: current.as_str(),
            });
        }
        match &command {
            Command::Reorder { starts, stencil_pct } => self.reorder(starts, *stencil_pct)?,
            Command::Profile { stencil_pct } => self.run_profile(*stencil_pct)?,
            Command::Scan { params } => self.run_scan(params)?,
            Command::SetCutoff { value } => self.set_cutoff(*value)?,
            Command::ProposeMerges { alpha, order_rule } => self.propose(*alpha, *order_rule)?,
            Command::ApplyMerges { pairs } => self.apply_merges(pairs.as_deref())?,
            Command::Expand { rule } => self.expand(*rule)?,
            Command::Reset { stage } => {
                if *stage > current {
                    return Err(Error::StageConflict {
                        command: "reset",
                        required: stage.as_str(),
                        current: current.as_str(),
                    });
                }
                self.truncate(*stage);
            }
        }
        self.history.push(command);
        Ok(self.stage())
    }

    fn truncate(&mut self, keep: Stage) {
        if keep < Stage::Expanded {
            self.expanded = None;
        }
        if keep < Stage::Merged {
            self.merged = None;
        }
        if keep < Stage::Proposed {
            self.proposal = None;
        }
        if keep < Stage::Cut {
            self.cut = None;
            self.scan = None;
        }
        if keep < Stage::Profiled {
            self.profile = None;
        }
        if keep < Stage::Reordered {
            self.reordered = None;
        }
    }

    fn reorder(&mut self, starts: &StartStrategy, stencil_pct: f64) -> Result<()> {
        let cfg = Config {
            starts: starts.clone(),
            stencil_pct,
            ..self.config.clone()
        };
        let reordering = pipeline::choose_reordering(&self.matrix, &cfg, self.execution)?;
        let permuted = self.matrix.permuted(&reordering.order)?;
        self.truncate(Stage::Loaded);
        self.config = cfg;
        self.reordered = Some(Reordered {
            stencil_pct,
            reordering,
            permuted,
        });
        Ok(())
    }

    fn reordered(&self) -> &Reordered {
        self.reordered.as_ref().expect("stage checked")
    }

    fn run_profile(&mut self, stencil_pct: Option<f64>) -> Result<()> {
        let r = self.reordered();
        let pct = stencil_pct.unwrap_or(r.stencil_pct);
        let cfg = Config {
            stencil_pct: pct,
            ..self.config.clone()
        };
        let profile = compute_delta_profile(&r.permuted, cfg.stencil(self.matrix.n())?)?;
        self.truncate(Stage::Reordered);
        self.config = cfg;
        self.profile = Some(profile);
        Ok(())
    }

    fn run_scan(&mut self, params: &ScanParams) -> Result<()> {
        let r = self.reordered();
        let profile = self.profile.as_ref().expect("stage checked");
        let scan = scan_cutoffs(profile, &r.permuted, params)?;
        let cut = extract_clusters_at(profile, &r.reordering.order, scan.chosen, scan.min_size_elements)?;
        self.truncate(Stage::Profiled);
        self.config = Config {
            min_size_pct: params.min_size_pct,
            n_candidates: params.n_candidates,
            use_all_cutoff: params.use_all_cutoff,
            score_function: params.score_function,
            cutoff: None,
            ..self.config.clone()
        };
        self.scan = Some(scan);
        self.cut = Some(cut);
        Ok(())
    }

    fn set_cutoff(&mut self, value: f64) -> Result<()> {
        let r = self.reordered();
        let profile = self.profile.as_ref().expect("stage checked");
        let scan = override_cutoff(self.scan.as_ref().expect("stage checked"), value)
            .map_err(|_| Error::param("value", format!("cutoff must be finite, got {value}")))?;
        let cut = extract_clusters_at(profile, &r.reordering.order, scan.chosen, scan.min_size_elements)?;
        self.truncate(Stage::Profiled);
        self.config.cutoff = Some(value);
        self.scan = Some(scan);
        self.cut = Some(cut);
        Ok(())
    }

    fn propose(&mut self, alpha: f64, order_rule: MergeOrder) -> Result<()> {
        let cut = self.cut.as_ref().expect("stage checked");
        let zones = zone_table(&self.reordered().permuted, cut)?;
        let plan = plan_merges(&zones, alpha, order_rule)?;
        self.truncate(Stage::Cut);
        self.config.alpha = alpha;
        self.config.merge_order = order_rule;
        self.config.merge_edits = None;
        self.proposal = Some(Proposal { plan, zones });
        Ok(())
    }

    fn apply_merges(&mut self, pairs: Option<&[(usize, usize)]>) -> Result<()> {
        let cut = self.cut.as_ref().expect("stage checked");
        let plan = &self.proposal.as_ref().expect("stage checked").plan;
        let merged = merge_pairs(cut, pairs.unwrap_or(&plan.pairs)).map_err(|e| match e {
            Error::UnknownCluster { id, available } => {
                Error::param("pairs", format!("cluster id {id} does not exist ({available} clusters)"))
            }
            other => other,
        })?;
        self.truncate(Stage::Proposed);
        self.config.merge_edits = pairs.map(<[_]>::to_vec);
        self.merged = Some(merged);
        Ok(())
    }

    fn expand(&mut self, rule: Expansion) -> Result<()> {
        let merged = self.merged.as_ref().expect("stage checked");
        let stats = all_cluster_stats(&self.reordered().permuted, merged)?;
        let expanded = expand_clusters(&self.matrix, merged, &stats, rule)?;
        self.config.beta = rule.beta;
        self.config.keep_no_noise = rule.keep_no_noise;
        self.expanded = Some((stats, expanded));
        Ok(())
    }

    /// Headline state.
    pub fn state(&self) -> StateView {
        let cs = self.clusters();
        StateView {
            schema: SCHEMA_VERSION,
            n: self.matrix.n(),
            stage: self.stage(),
            has_truth: self.truth.is_some(),
            history_len: self.history.len(),
            best_start: self.reordering().map(|r| r.start),
            delta_integral: self.reordering().map(|r| r.delta_integral),
            half_width: self.profile.as_ref().map(DeltaProfile::half_width),
            cutoff: self.scan.as_ref().map(|s| s.chosen),
            cutoff_overridden: self.scan.as_ref().map(|s| s.overridden),
            n_clusters: cs.map(ClusterSet::n_clusters),
            noise_fraction: cs.map(ClusterSet::noise_fraction),
            config: self.config.clone(),
        }
    }

    pub fn delta_view(&self) -> Result<DeltaView> {
        let profile = self.profile.as_ref().ok_or(Error::StageConflict {
            command: "delta",
            required: Stage::Profiled.as_str(),
            current: self.stage().as_str(),
        })?;
        Ok(DeltaView {
            schema: SCHEMA_VERSION,
            n: profile.n(),
            half_width: profile.half_width(),
            first_position: *profile.window().start(),
            values: profile.values().to_vec(),
            cutoff: self.scan.as_ref().map(|s| s.chosen),
        })
    }

    pub fn scan_view(&self) -> Result<ScanView> {
        let scan = self.scan.as_ref().ok_or(Error::StageConflict {
            command: "scan",
            required: Stage::Cut.as_str(),
            current: self.stage().as_str(),
        })?;
        Ok(ScanView {
            schema: SCHEMA_VERSION,
            scan: scan.clone(),
        })
    }

    pub fn clusters_view(&self) -> Result<ClustersView> {
        let cs = self.clusters().ok_or(Error::StageConflict {
            command: "clusters",
            required: Stage::Cut.as_str(),
            current: self.stage().as_str(),
        })?;
        let permuted = &self.reordered().permuted;
        let stats = match &self.expanded {
            Some((stats, _)) => stats.clone(),
            None => all_cluster_stats(permuted, cs)?,
        };
        let clusters = cs
            .clusters()
            .iter()
            .zip(stats)
            .enumerate()
            .map(|(id, (c, stats))| ClusterView {
                id,
                size: c.size(),
                first_position: c.first_position(),
                ranges: c.ranges.iter().map(|r| (r.start, r.end)).collect(),
                expanded: c.expanded.len(),
                stats,
            })
            .collect();
        let (proposal, nearest) = match (&self.proposal, self.stage() < Stage::Merged) {
            (Some(p), true) => (Some(p.plan.clone()), nearest_from_mean_off(&p.zones.mean_off)),
            _ => (None, nearest_from_mean_off(&zone_table(permuted, cs)?.mean_off)),
        };
        Ok(ClustersView {
            schema: SCHEMA_VERSION,
            stage: self.stage(),
            noise: cs.noise_count(),
            clusters,
            proposal,
            nearest,
        })
    }

    /// Truth-versus-prediction counts with columns greedily aligned to rows.
    pub fn confusion_view(&self) -> Result<ConfusionView> {
        let truth = self
            .truth
            .as_deref()
            .ok_or_else(|| Error::param("truth", "the session was created without truth labels"))?;
        let cs = self.clusters().ok_or(Error::StageConflict {
            command: "confusion",
            required: Stage::Cut.as_str(),
            current: self.stage().as_str(),
        })?;
        let (table, mapping) = auto_reorder_columns(&confusion_matrix(truth, cs.labels())?);
        Ok(ConfusionView {
            schema: SCHEMA_VERSION,
            table,
            mapping,
            scores: score_labeling(truth, cs.labels())?,
        })
    }

    /// Text export of the current clusters or ordering.
    pub fn export(&self, kind: ExportKind) -> Result<String> {
        let conflict = |required: Stage| Error::StageConflict {
            command: "export",
            required: required.as_str(),
            current: self.stage().as_str(),
        };
        match kind {
            ExportKind::Order => Ok(order_text(&self.reordering().ok_or(conflict(Stage::Reordered))?.order)),
            ExportKind::Labels => Ok(labels_csv(self.clusters().ok_or(conflict(Stage::Cut))?.labels())),
            ExportKind::Indices => Ok(ndx(self.clusters().ok_or(conflict(Stage::Cut))?)),
        }
    }

    /// Mean-pooled block of the (reordered, once available) matrix for a heatmap.
    pub fn tile(&self, x: usize, y: usize, zoom: u32) -> Result<Tile> {
        let m = self.reordered.as_ref().map_or(&self.matrix, |r| &r.permuted);
        matrix_tile(m, x, y, zoom)
    }
}

/// Tile `(x, y)` at `zoom`: the matrix is pooled by `ceil(n / (TILE_SIZE * 2^zoom))` so that
/// zoom 0 fits in one tile, and each tile covers `TILE_SIZE` pooled cells per axis.
pub fn matrix_tile(m: &DistanceMatrix, x: usize, y: usize, zoom: u32) -> Result<Tile> {
    if zoom > MAX_ZOOM {
        return Err(Error::param("zoom", format!("must be at most {MAX_ZOOM}")));
    }
    let n = m.n();
    let pool = n.div_ceil(TILE_SIZE << zoom).max(1);
    let pooled = n.div_ceil(pool);
    let tiles = pooled.div_ceil(TILE_SIZE);
    if x >= tiles {
        return Err(Error::param("x", format!("tile column {x} out of range (0..{tiles})")));
    }
    if y >= tiles {
        return Err(Error::param("y", format!("tile row {y} out of range (0..{tiles})")));
    }
    let cells = |t: usize| t * TILE_SIZE..((t + 1) * TILE_SIZE).min(pooled);
    let (rows, cols) = (cells(y), cells(x));
    let mut values = Vec::with_capacity(rows.len() * cols.len());
    for r in rows.clone() {
        let (r0, r1) = (r * pool, ((r + 1) * pool).min(n));
        for c in cols.clone() {
            let (c0, c1) = (c * pool, ((c + 1) * pool).min(n));
            let mut sum = 0.0;
            for i in r0..r1 {
                let row = m.row(i);
                sum += row[c0..c1].iter().sum::<f64>();
            }
            values.push((sum / ((r1 - r0) * (c1 - c0)) as f64) as f32);
        }
    }
    Ok(Tile {
        schema: SCHEMA_VERSION,
        n,
        zoom,
        pool,
        tiles_per_axis: tiles,
        x,
        y,
        rows: rows.len(),
        cols: cols.len(),
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportKind {
    Labels,
    Indices,
    Order,
}

impl FromStr for ExportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "labels" => Ok(ExportKind::Labels),
            "indices" | "ndx" => Ok(ExportKind::Indices),
            "order" => Ok(ExportKind::Order),
            other => Err(Error::param("kind", format!("unknown export {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub schema: u32,
    pub n: usize,
    pub stage: Stage,
    pub has_truth: bool,
    pub history_len: usize,
    pub best_start: Option<usize>,
    pub delta_integral: Option<f64>,
    pub half_width: Option<usize>,
    pub cutoff: Option<f64>,
    pub cutoff_overridden: Option<bool>,
    pub n_clusters: Option<usize>,
    pub noise_fraction: Option<f64>,
    pub config: Config,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaView {
    pub schema: u32,
    pub n: usize,
    pub half_width: usize,
    /// Position of `values[0]`.
    pub first_position: usize,
    pub values: Vec<f64>,
    pub cutoff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanView {
    pub schema: u32,
    #[serde(flatten)]
    pub scan: CutoffScan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterView {
    pub id: usize,
    pub size: usize,
    pub first_position: usize,
    /// `[begin, end)` reordered positions.
    pub ranges: Vec<(usize, usize)>,
    /// Members that joined by expansion.
    pub expanded: usize,
    pub stats: ClusterStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClustersView {
    pub schema: u32,
    pub stage: Stage,
    pub noise: usize,
    pub clusters: Vec<ClusterView>,
    /// Pending merge proposal, if one has not been applied yet.
    pub proposal: Option<MergePlan>,
    pub nearest: NearestMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionView {
    pub schema: u32,
    pub table: ContingencyTable,
    /// Predicted label to displayed column.
    pub mapping: ColumnMapping,
    pub scores: ScoreCard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub schema: u32,
    pub n: usize,
    pub zoom: u32,
    /// Elements per pooled cell along each axis.
    pub pool: usize,
    pub tiles_per_axis: usize,
    pub x: usize,
    pub y: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major pooled means.
    pub values: Vec<f32>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Precision;

    fn two_blocks() -> DistanceMatrix {
        DistanceMatrix::from_upper(6, Precision::F64, |i, j| if (i < 3) == (j < 3) { 1.0 } else { 10.0 }).unwrap()
    }

    fn reorder() -> Command {
        Command::Reorder {
            starts: StartStrategy::All,
            stencil_pct: 20.0,
        }
    }

    #[test]
    fn commands_parse_with_defaults() {
        let c: Command = serde_json::from_str(r#"{"type":"reorder"}"#).unwrap();
        assert_eq!(
            c,
            Command::Reorder {
                starts: StartStrategy::All,
                stencil_pct: 1.0
            }
        );
        let c: Command = serde_json::from_str(r#"{"type":"scan","min_size_pct":5}"#).unwrap();
        let Command::Scan { params } = c else { panic!() };
        assert_eq!(params.min_size_pct, 5.0);
        assert_eq!(params.n_candidates, 200);
        let c: Command = serde_json::from_str(r#"{"type":"expand","beta":2}"#).unwrap();
        assert_eq!(
            c,
            Command::Expand {
                rule: Expansion {
                    beta: 2.0,
                    keep_no_noise: false
                }
            }
        );
        assert!(serde_json::from_str::<Command>(r#"{"type":"set_cutoff"}"#).is_err());
        assert!(serde_json::from_str::<Command>(r#"{"type":"launch"}"#).is_err());
    }

    #[test]
    fn commands_round_trip() {
        let all = vec![
            reorder(),
            Command::Profile { stencil_pct: None },
            Command::Scan {
                params: ScanParams::default(),
            },
            Command::SetCutoff { value: 3.5 },
            Command::ProposeMerges {
                alpha: 1.0,
                order_rule: MergeOrder::LargestFirst,
            },
            Command::ApplyMerges {
                pairs: Some(vec![(0, 1)]),
            },
            Command::Expand {
                rule: Expansion::default(),
            },
            Command::Reset { stage: Stage::Cut },
        ];
        for c in all {
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<Command>(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn stages_advance_and_conflict() {
        let mut s = Session::new(two_blocks(), Some(vec![0, 0, 0, 1, 1, 1])).unwrap();
        let err = s.apply(Command::SetCutoff { value: 1.0 }).unwrap_err();
        assert!(matches!(err, Error::StageConflict { required: "cut", .. }));
        assert_eq!(s.apply(reorder()).unwrap(), Stage::Reordered);
        assert_eq!(s.apply(Command::Profile { stencil_pct: None }).unwrap(), Stage::Profiled);
        let scan = Command::Scan {
            params: ScanParams::default(),
        };
        assert_eq!(s.apply(scan).unwrap(), Stage::Cut);
        assert_eq!(s.clusters().unwrap().n_clusters(), 2);
        let propose = Command::ProposeMerges {
            alpha: 1.0,
            order_rule: MergeOrder::default(),
        };
        assert_eq!(s.apply(propose).unwrap(), Stage::Proposed);
        assert!(s.merge_plan().unwrap().pairs.is_empty());
        assert_eq!(s.apply(Command::ApplyMerges { pairs: None }).unwrap(), Stage::Merged);
        let expand = Command::Expand {
            rule: Expansion {
                beta: 0.0,
                keep_no_noise: true,
            },
        };
        assert_eq!(s.apply(expand).unwrap(), Stage::Expanded);
        assert_eq!(s.clusters().unwrap().noise_count(), 0);
        let confusion = s.confusion_view().unwrap();
        assert_eq!(confusion.scores.ari, 1.0);

        // going back drops downstream state
        assert_eq!(s.apply(Command::SetCutoff { value: -1.0 }).unwrap(), Stage::Cut);
        assert_eq!(s.clusters().unwrap().n_clusters(), 0);
        assert_eq!(s.apply(Command::Reset { stage: Stage::Loaded }).unwrap(), Stage::Loaded);
        assert!(s.reordering().is_none());
        assert!(s.apply(Command::Reset { stage: Stage::Cut }).is_err());
    }

    #[test]
    fn failed_commands_leave_state_alone() {
        let mut s = Session::new(two_blocks(), None).unwrap();
        s.apply(reorder()).unwrap();
        let before = s.state();
        let err = s.apply(Command::Profile { stencil_pct: Some(-1.0) }).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. } | Error::StencilTooLarge { .. }));
        assert_eq!(s.state(), before);
        assert_eq!(s.history().len(), 1);
    }

    #[test]
    fn edited_merges_are_validated() {
        let mut s = Session::new(two_blocks(), None).unwrap();
        for c in [
            reorder(),
            Command::Profile { stencil_pct: None },
            Command::Scan {
                params: ScanParams::default(),
            },
            Command::ProposeMerges {
                alpha: 1.0,
                order_rule: MergeOrder::default(),
            },
        ] {
            s.apply(c).unwrap();
        }
        let err = s.apply(Command::ApplyMerges {
            pairs: Some(vec![(0, 7)]),
        });
        assert!(matches!(err, Err(Error::InvalidParameter { field: "pairs", .. })));
        s.apply(Command::ApplyMerges {
            pairs: Some(vec![(0, 1)]),
        })
        .unwrap();
        assert_eq!(s.clusters().unwrap().n_clusters(), 1);
        assert_eq!(s.config().merge_edits, Some(vec![(0, 1)]));
    }

    #[test]
    fn replay_rebuilds_the_same_session() {
        let mut s = Session::new(two_blocks(), None).unwrap();
        for c in [
            reorder(),
            Command::Profile { stencil_pct: None },
            Command::Scan {
                params: ScanParams::default(),
            },
            Command::SetCutoff { value: 100.0 },
        ] {
            s.apply(c).unwrap();
        }
        let r = Session::replay(two_blocks(), None, s.history()).unwrap();
        assert_eq!(r.state(), s.state());
        assert_eq!(r.clusters(), s.clusters());
    }

    #[test]
    fn tiles_pool_and_cover() {
        let n = 1100;
        let m = DistanceMatrix::from_upper(n, Precision::F64, |i, j| (i + j) as f64).unwrap();
        let t = matrix_tile(&m, 0, 0, 0).unwrap();
        assert_eq!((t.pool, t.tiles_per_axis, t.rows, t.cols), (3, 1, 367, 367));
        // cell (0, 1): rows 0..3, cols 3..6, mean of i + j
        assert_eq!(t.values[1], 5.0);
        // last cell is the 2x2 remainder block (rows and cols 1098..1100), diagonal zero
        assert_eq!(*t.values.last().unwrap(), ((0.0 + 2197.0 + 2197.0 + 0.0) / 4.0) as f32);

        let t = matrix_tile(&m, 1, 1, 1).unwrap();
        assert_eq!((t.pool, t.tiles_per_axis), (2, 2));
        let t = matrix_tile(&m, 1, 1, 2).unwrap();
        assert_eq!((t.pool, t.tiles_per_axis, t.rows), (1, 3, 512));
        assert_eq!((t.values[0], t.values[1]), (0.0, 1025.0));
        assert!(matrix_tile(&m, 3, 0, 2).is_err());
    }
}
