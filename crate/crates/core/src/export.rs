//! Text artifacts of a run and their readers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every file parses back
//! to the exact values that produced it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::delta::DeltaProfile;
use crate::error::{Error, Result};
use crate::io::{parse_table, LoadOptions};
use crate::matrix::FeatureTable;
use crate::refine::MergePlan;
use crate::segment::{ClusterSet, CutoffScan, NOISE};

/// Indices per line in index files.
pub const NDX_PER_LINE: usize = 15;

/// One original index per line.
pub fn order_text(order: &[usize]) -> String {
    let mut out = String::with_capacity(order.len() * 6);
    for i in order {
        writeln!(out, "{i}").unwrap();
    }
    out
}

pub fn parse_order(text: &str) -> Result<Vec<usize>> {
    let mut order = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        order.push(line.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            column: 0,
            value: line.to_string(),
        })?);
    }
    crate::matrix::check_permutation(&order, order.len())?;
    Ok(order)
}

/// `position,delta` for every position of the valid window.
pub fn delta_csv(profile: &DeltaProfile) -> String {
    let mut out = String::from("position,delta\n");
    for (p, v) in profile.iter() {
        writeln!(out, "{p},{v}").unwrap();
    }
    out
}

/// Reads a profile back; the stencil half-width and element count are implied by the first
/// and last positions.
pub fn parse_delta_csv(text: &str) -> Result<DeltaProfile> {
    let rows = parse_table(strip_header(text, "position,delta"), &LoadOptions::default())?;
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Err(Error::Empty("delta profile"));
    };
    if first.len() != 2 {
        return Err(Error::Format("delta profile needs two columns".into()));
    }
    let half_width = first[0] as usize;
    let n = last[0] as usize + half_width;
    for (k, r) in rows.iter().enumerate() {
        if r[0] != (half_width + k) as f64 {
            return Err(Error::Format(format!("delta profile position {} out of sequence", r[0])));
        }
    }
    DeltaProfile::from_values(n, half_width, rows.iter().map(|r| r[1]).collect())
}

/// `threshold,score,n_clusters` for every candidate cutoff.
pub fn scan_csv(scan: &CutoffScan) -> String {
    let mut out = String::from("threshold,score,n_clusters\n");
    for ((t, s), c) in scan.candidates.iter().zip(&scan.scores).zip(&scan.n_clusters) {
        writeln!(out, "{t},{s},{c}").unwrap();
    }
    out
}

/// One `original_index,label` line per element; noise is `-1`.
pub fn labels_csv(labels: &[i64]) -> String {
    let mut out = String::from("# original_index,label\n");
    for (i, l) in labels.iter().enumerate() {
        writeln!(out, "{i},{l}").unwrap();
    }
    out
}

/// Comma-separated feature rows in shortest round-trip form.
pub fn features_csv(table: &FeatureTable) -> String {
    let mut out = String::new();
    for row in table.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    out
}

/// Index groups: one `[Cluster_k]` section per cluster and a trailing `[Noise]` section,
/// 1-based indices in reordered-position order.
pub fn ndx(cs: &ClusterSet) -> String {
    let mut out = String::new();
    let mut section = |name: String, members: Vec<usize>| {
        writeln!(out, "[{name}]").unwrap();
        for chunk in members.chunks(NDX_PER_LINE) {
            let line: Vec<String> = chunk.iter().map(|i| (i + 1).to_string()).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
    };
    for j in 0..cs.n_clusters() {
        section(format!("Cluster_{j}"), cs.members(j));
    }
    let noise = cs.order().iter().copied().filter(|&i| cs.labels()[i] == NOISE).collect();
    section("Noise".into(), noise);
    out
}

pub fn cluster_set_json(cs: &ClusterSet) -> Result<String> {
    Ok(serde_json::to_string(cs)? + "\n")
}

pub fn parse_cluster_set(text: &str) -> Result<ClusterSet> {
    Ok(serde_json::from_str(text)?)
}

pub fn merge_plan_json(plan: &MergePlan) -> Result<String> {
    Ok(serde_json::to_string_pretty(plan)? + "\n")
}

fn strip_header<'a>(text: &'a str, header: &str) -> &'a str {
    match text.split_once('\n') {
        Some((first, rest)) if first.trim() == header => rest,
        _ => text,
    }
}

/// File names of every artifact, `<dir>/<project>_<kind>.<ext>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArtifactPaths {
    pub dir: PathBuf,
    pub project: String,
}

impl ArtifactPaths {
    pub fn new(dir: impl Into<PathBuf>, project: impl Into<String>) -> Self {
        ArtifactPaths {
            dir: dir.into(),
            project: project.into(),
        }
    }

    pub fn file(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}_{suffix}", self.project))
    }

    pub fn order(&self) -> PathBuf {
        self.file("order.txt")
    }
    pub fn delta(&self) -> PathBuf {
        self.file("delta.csv")
    }
    pub fn scan(&self) -> PathBuf {
        self.file("scan.csv")
    }
    pub fn cut(&self) -> PathBuf {
        self.file("cut.json")
    }
    pub fn merge_plan(&self) -> PathBuf {
        self.file("merge_plan.json")
    }
    pub fn zones(&self) -> PathBuf {
        self.file("zones.csv")
    }
    pub fn merged(&self) -> PathBuf {
        self.file("merged.json")
    }
    pub fn expanded(&self) -> PathBuf {
        self.file("expanded.json")
    }
    pub fn labels(&self) -> PathBuf {
        self.file("labels.csv")
    }
    pub fn ndx(&self) -> PathBuf {
        self.file("clusters.ndx")
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::Cluster;

    #[test]
    fn order_round_trip() {
        let order = vec![3, 0, 2, 1];
        assert_eq!(order_text(&order), "3\n0\n2\n1\n");
        assert_eq!(parse_order(&order_text(&order)).unwrap(), order);
        assert!(parse_order("0\n0\n").is_err());
        assert!(parse_order("0\nx\n").is_err());
    }

    #[test]
    fn delta_round_trip_is_exact() {
        let values = vec![0.1 + 0.2, 1.0 / 3.0, 2.5, 1e-17];
        let profile = DeltaProfile::from_values(5, 1, values).unwrap();
        let text = delta_csv(&profile);
        assert!(text.starts_with("position,delta\n1,0.30000000000000004\n"));
        assert_eq!(parse_delta_csv(&text).unwrap(), profile);
    }

    #[test]
    fn delta_rejects_gaps() {
        assert!(parse_delta_csv("position,delta\n1,0.5\n3,0.5\n").is_err());
        assert!(parse_delta_csv("position,delta\n").is_err());
    }

    #[test]
    fn features_round_trip_is_exact() {
        let table = FeatureTable::new(&[vec![0.1 + 0.2, -1e-300], vec![3.0, 1.0 / 7.0]]).unwrap();
        let text = features_csv(&table);
        assert_eq!(text.lines().next().unwrap(), "0.30000000000000004,-1e-300");
        let rows = parse_table(&text, &LoadOptions::default()).unwrap();
        assert_eq!(FeatureTable::new(&rows).unwrap(), table);
    }

    #[test]
    fn labels_and_ndx() {
        let cs = ClusterSet::new(
            vec![4, 2, 0, 1, 3],
            vec![
                Cluster::from_range(0..2),
                Cluster {
                    ranges: vec![3..4],
                    expanded: vec![2],
                },
            ],
        )
        .unwrap();
        assert_eq!(labels_csv(cs.labels()), "# original_index,label\n0,1\n1,1\n2,0\n3,-1\n4,0\n");
        assert_eq!(ndx(&cs), "[Cluster_0]\n5 3\n[Cluster_1]\n1 2\n[Noise]\n4\n");
    }

    #[test]
    fn ndx_wraps_lines() {
        let cs = ClusterSet::new((0..20).collect(), vec![Cluster::from_range(0..20)]).unwrap();
        let text = ndx(&cs);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1].split(' ').count(), 15);
        assert_eq!(lines[2], "16 17 18 19 20");
        assert_eq!(lines[3], "[Noise]");
    }

    #[test]
    fn cluster_set_json_round_trip() {
        let cs = ClusterSet::new(
            vec![1, 0, 2, 3],
            vec![Cluster {
                ranges: vec![0..2],
                expanded: vec![3],
            }],
        )
        .unwrap();
        let back = parse_cluster_set(&cluster_set_json(&cs).unwrap()).unwrap();
        assert_eq!(back, cs);
        assert_eq!(back.labels(), &[0, 0, -1, 0]);
    }

    #[test]
    fn cluster_set_json_is_validated() {
        let bad = r#"{"order":[0,1],"clusters":[{"ranges":[{"start":0,"end":3}]}]}"#;
        assert!(parse_cluster_set(bad).is_err());
    }
}
