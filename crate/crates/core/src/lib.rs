//! Deterministic clustering of a pairwise distance matrix.
//!
//! Elements are chained greedily into a nearest-neighbor order, a diagonal stencil statistic
//! is traced along that order, and clusters are the runs where the statistic stays below a
//! cutoff chosen by a size/variance score. Clusters are then merged when their off-diagonal
//! blocks are close, and noise elements are reattached to the nearest medoid.
//!
//! ```
//! use chainclust::{autopilot, generate_toy, compute_distance_matrix, Config, Execution, Precision, ToySpec};
//!
//! let spec = ToySpec { points_per_cluster: 20, noise_points: 0, ..ToySpec::default() };
//! let (points, _) = generate_toy(&spec).unwrap();
//! let m = compute_distance_matrix(&points, Precision::F64).unwrap();
//! let cfg = Config { stencil_pct: 5.0, ..Config::default() };
//! let run = autopilot(&m, &cfg, Execution::Serial).unwrap();
//! assert!(run.merged.n_clusters() > 0);
//! ```

pub mod delta;
pub mod error;
pub mod evaluate;
pub mod export;
pub mod io;
pub mod matrix;
pub mod pipeline;
pub mod refine;
pub mod reorder;
pub mod segment;
pub mod session;
pub mod synth;

pub use delta::{compute_delta_profile, delta_profile_for_order, DeltaProfile, Stencil};
pub use error::{Error, Result};
pub use evaluate::{confusion_matrix, score_labeling, ContingencyTable, ScoreCard};
pub use io::{load_data, load_matrix, save_matrix, LoadOptions, Loaded};
pub use matrix::{compute_distance_matrix, DistanceMatrix, FeatureTable, Precision};
pub use pipeline::{autopilot, Config, Run, Summary};
pub use refine::{ClusterStats, Expansion, MergeOrder, MergePlan};
pub use reorder::{nearest_neighbor_chain, select_best_start, Execution, Reordering, StartStrategy};
pub use segment::{scan_cutoffs, Cluster, ClusterSet, CutoffScan, ScanParams, ScoreFunction, NOISE};
pub use session::{Command, Session, Stage};
pub use synth::{generate_toy, ToySpec};
