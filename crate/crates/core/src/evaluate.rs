//! Confusion matrices and external clustering-validity scores.
//!
//! Every score is computed from the contingency table alone. The noise label `-1` is an
//! ordinary cluster here: a labeling that leaves elements unclustered is scored as if
//! those elements formed one extra cluster.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::NOISE;

/// Co-occurrence counts of true (rows) and predicted (columns) labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<i64>,
    /// Predicted labels; the noise label, if present, is always last.
    pub col_labels: Vec<i64>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.col_labels.len())
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }

    fn with_column_order(&self, cols: &[usize]) -> ContingencyTable {
        ContingencyTable {
            row_labels: self.row_labels.clone(),
            col_labels: cols.iter().map(|&c| self.col_labels[c]).collect(),
            counts: self
                .counts
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect(),
        }
    }

    /// Comma-separated rendering with a header row of predicted labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("truth");
        for c in &self.col_labels {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
        for (label, row) in self.row_labels.iter().zip(&self.counts) {
            out.push_str(&label.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_lengths(truth: &[i64], predicted: &[i64]) -> Result<()> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("no labels"));
    }
    Ok(())
}

/// Builds the confusion matrix; rows sorted by true label, columns by predicted label
/// with noise last.
pub fn confusion_matrix(truth: &[i64], predicted: &[i64]) -> Result<ContingencyTable> {
    check_lengths(truth, predicted)?;
    let mut cells: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(predicted) {
        *cells.entry((t, p)).or_default() += 1;
    }
    let mut row_labels: Vec<i64> = truth.to_vec();
    row_labels.sort_unstable();
    row_labels.dedup();
    let mut col_labels: Vec<i64> = predicted.to_vec();
    col_labels.sort_unstable_by_key(|&l| (l == NOISE, l));
    col_labels.dedup();
    let counts = row_labels
        .iter()
        .map(|&t| {
            col_labels
                .iter()
                .map(|&p| cells.get(&(t, p)).copied().unwrap_or(0))
                .collect()
        })
        .collect();
    Ok(ContingencyTable {
        row_labels,
        col_labels,
        counts,
    })
}

/// Predicted label to column index after reordering.
pub type ColumnMapping = BTreeMap<i64, usize>;

/// Reorders columns so large cells sit on the diagonal: the largest remaining cell maps
/// its column to its row's slot, repeatedly. Columns left over are appended by decreasing
/// size; noise stays last. Rows are untouched.
pub fn auto_reorder_columns(t: &ContingencyTable) -> (ContingencyTable, ColumnMapping) {
    let rows = t.row_labels.len();
    let regular: Vec<usize> = (0..t.col_labels.len())
        .filter(|&c| t.col_labels[c] != NOISE)
        .collect();
    let mut cells: Vec<(u64, usize, usize)> = Vec::new();
    for r in 0..rows {
        for &c in &regular {
            if t.counts[r][c] > 0 {
                cells.push((t.counts[r][c], r, c));
            }
        }
    }
    cells.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut row_taken = vec![false; rows];
    let mut col_slot: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, r, c) in cells {
        if row_taken[r] || col_slot.contains_key(&c) {
            continue;
        }
        row_taken[r] = true;
        col_slot.insert(c, r);
    }
    let mut matched: Vec<usize> = col_slot.keys().copied().collect();
    matched.sort_by_key(|c| col_slot[c]);
    let sums = t.col_sums();
    let mut rest: Vec<usize> = regular
        .iter()
        .copied()
        .filter(|c| !col_slot.contains_key(c))
        .collect();
    rest.sort_by(|&a, &b| sums[b].cmp(&sums[a]).then(t.col_labels[a].cmp(&t.col_labels[b])));
    let mut cols = matched;
    cols.extend(rest);
    cols.extend((0..t.col_labels.len()).filter(|&c| t.col_labels[c] == NOISE));
    let mapping = cols
        .iter()
        .enumerate()
        .map(|(slot, &c)| (t.col_labels[c], slot))
        .collect();
    (t.with_column_order(&cols), mapping)
}

/// Orders columns with a previously computed mapping. Labels missing from it follow by
/// decreasing size; noise stays last.
pub fn apply_column_mapping(t: &ContingencyTable, mapping: &ColumnMapping) -> ContingencyTable {
    let sums = t.col_sums();
    let mut cols: Vec<usize> = (0..t.col_labels.len()).collect();
    cols.sort_by_key(|&c| {
        let l = t.col_labels[c];
        match mapping.get(&l) {
            _ if l == NOISE => (2, 0, 0, l),
            Some(&slot) => (0, slot, 0, l),
            None => (1, 0, u64::MAX - sums[c], l),
        }
    });
    t.with_column_order(&cols)
}

/// The four external scores.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub ari: f64,
    pub ami: f64,
    pub v_measure: f64,
    pub fowlkes_mallows: f64,
}

impl ScoreCard {
    /// A table row: `| name | ARI | AMI | V | FM |` with two decimals.
    pub fn table_row(&self, name: &str) -> String {
        format!(
            "| {name} | {:.2} | {:.2} | {:.2} | {:.2} |",
            self.ari, self.ami, self.v_measure, self.fowlkes_mallows
        )
    }

    pub const TABLE_HEADER: &'static str =
        "| method | adjusted rand | adjusted mutual info | V-measure | Fowlkes-Mallows |";
}

impl fmt::Display for ScoreCard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ARI={:.4} AMI={:.4} V={:.4} FM={:.4}",
            self.ari, self.ami, self.v_measure, self.fowlkes_mallows
        )
    }
}

fn comb2(k: u64) -> u128 {
    let k = k as u128;
    k * k.saturating_sub(1) / 2
}

struct PairCounts {
    /// Pairs together in both labelings.
    both: u128,
    together_truth: u128,
    together_pred: u128,
    total: u128,
}

fn pair_counts(t: &ContingencyTable) -> PairCounts {
    PairCounts {
        both: t.counts.iter().flatten().map(|&c| comb2(c)).sum(),
        together_truth: t.row_sums().into_iter().map(comb2).sum(),
        together_pred: t.col_sums().into_iter().map(comb2).sum(),
        total: comb2(t.total()),
    }
}

/// Adjusted Rand index.
pub fn adjusted_rand_index(t: &ContingencyTable) -> f64 {
    let p = pair_counts(t);
    if p.total == 0 {
        return 1.0;
    }
    let index = p.both as f64;
    let expected = p.together_truth as f64 * p.together_pred as f64 / p.total as f64;
    let max = (p.together_truth + p.together_pred) as f64 / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Fowlkes-Mallows index over element pairs.
pub fn fowlkes_mallows(t: &ContingencyTable) -> f64 {
    let p = pair_counts(t);
    if p.both == 0 {
        return 0.0;
    }
    p.both as f64 / ((p.together_truth as f64) * (p.together_pred as f64)).sqrt()
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(t: &ContingencyTable) -> f64 {
    let n = t.total() as f64;
    let (a, b) = (t.row_sums(), t.col_sums());
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (a[i] as f64 * b[j] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Expected mutual information of two random labelings with the table's marginals
/// (hypergeometric model).
fn expected_mutual_information(t: &ContingencyTable) -> f64 {
    let n = t.total() as usize;
    let mut ln_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let nf = n as f64;
    let (a, b) = (t.row_sums(), t.col_sums());
    let mut emi = 0.0;
    for &ai in &a {
        let ai = ai as usize;
        for &bj in &b {
            let bj = bj as usize;
            let lo = (ai + bj).saturating_sub(n).max(1);
            let hi = ai.min(bj);
            let fixed = ln_fact[ai] + ln_fact[bj] + ln_fact[n - ai] + ln_fact[n - bj] - ln_fact[n];
            for nij in lo..=hi {
                let x = nij as f64;
                let term = x / nf * (nf * x / (ai as f64 * bj as f64)).ln();
                let ln_p = fixed
                    - ln_fact[nij]
                    - ln_fact[ai - nij]
                    - ln_fact[bj - nij]
                    - ln_fact[n + nij - ai - bj];
                emi += term * ln_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information, normalised by the larger of the two entropies.
pub fn adjusted_mutual_information(t: &ContingencyTable) -> f64 {
    let (rows, cols) = (t.row_labels.len(), t.col_labels.len());
    if rows == cols && rows <= 1 {
        return 1.0;
    }
    let n = t.total() as f64;
    let mi = mutual_information(t);
    let emi = expected_mutual_information(t);
    let h_truth = entropy(&t.row_sums(), n);
    let h_pred = entropy(&t.col_sums(), n);
    let mut denominator = h_truth.max(h_pred) - emi;
    if denominator < 0.0 {
        denominator = denominator.min(-f64::EPSILON);
    } else {
        denominator = denominator.max(f64::EPSILON);
    }
    (mi - emi) / denominator
}

/// Homogeneity, completeness and their harmonic mean.
pub fn homogeneity_completeness_v(t: &ContingencyTable) -> (f64, f64, f64) {
    let n = t.total() as f64;
    let h_truth = entropy(&t.row_sums(), n);
    let h_pred = entropy(&t.col_sums(), n);
    let mi = mutual_information(t);
    let homogeneity = if h_truth == 0.0 { 1.0 } else { (mi / h_truth).min(1.0) };
    let completeness = if h_pred == 0.0 { 1.0 } else { (mi / h_pred).min(1.0) };
    let v = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    (homogeneity, completeness, v)
}

/// Scores `predicted` against `truth`; needs at least two elements.
pub fn score_labeling(truth: &[i64], predicted: &[i64]) -> Result<ScoreCard> {
    check_lengths(truth, predicted)?;
    if truth.len() < 2 {
        return Err(Error::TooFewElements(truth.len()));
    }
    let t = confusion_matrix(truth, predicted)?;
    Ok(ScoreCard {
        ari: adjusted_rand_index(&t),
        ami: adjusted_mutual_information(&t),
        v_measure: homogeneity_completeness_v(&t).2,
        fowlkes_mallows: fowlkes_mallows(&t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_anti_diagonal() {
        let t = confusion_matrix(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap();
        assert_eq!(t.counts, vec![vec![2, 0], vec![0, 2]]);
        let t = confusion_matrix(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(t.counts, vec![vec![0, 2], vec![2, 0]]);
        let (r, mapping) = auto_reorder_columns(&t);
        assert_eq!(r.counts, vec![vec![2, 0], vec![0, 2]]);
        assert_eq!(mapping, BTreeMap::from([(0, 1), (1, 0)]));
    }

    #[test]
    fn all_noise_is_one_column() {
        let t = confusion_matrix(&[0, 0, 1], &[-1, -1, -1]).unwrap();
        assert_eq!(t.col_labels, vec![-1]);
        assert_eq!(t.counts, vec![vec![2], vec![1]]);
    }

    #[test]
    fn noise_column_last() {
        let t = confusion_matrix(&[0, 1, 1, 2], &[-1, 3, 0, -1]).unwrap();
        assert_eq!(t.col_labels, vec![0, 3, -1]);
        let (r, _) = auto_reorder_columns(&t);
        assert_eq!(*r.col_labels.last().unwrap(), -1);
    }

    #[test]
    fn errors() {
        assert!(matches!(confusion_matrix(&[0], &[0, 1]), Err(Error::LengthMismatch { .. })));
        assert!(confusion_matrix(&[], &[]).is_err());
        assert!(score_labeling(&[1], &[1]).is_err());
    }

    #[test]
    fn identity_mapping_for_diagonal() {
        let t = confusion_matrix(&[0, 0, 1, 1, 2], &[0, 0, 1, 1, 2]).unwrap();
        let (r, mapping) = auto_reorder_columns(&t);
        assert_eq!(r, t);
        assert_eq!(mapping, BTreeMap::from([(0, 0), (1, 1), (2, 2)]));
    }

    #[test]
    fn extra_columns_appended() {
        let t = ContingencyTable {
            row_labels: vec![0, 1],
            col_labels: vec![0, 1, 2],
            counts: vec![vec![5, 0, 1], vec![0, 4, 1]],
        };
        let (r, mapping) = auto_reorder_columns(&t);
        assert_eq!(r.col_labels, vec![0, 1, 2]);
        assert_eq!(mapping[&2], 2);
        let t = ContingencyTable {
            row_labels: vec![0, 1],
            col_labels: vec![0, 1, 2],
            counts: vec![vec![0, 1, 5], vec![4, 0, 1]],
        };
        let (r, _) = auto_reorder_columns(&t);
        assert_eq!(r.col_labels, vec![2, 0, 1]);
        assert_eq!(r.counts, vec![vec![5, 0, 1], vec![1, 4, 0]]);
    }

    #[test]
    fn mapping_reuse() {
        let t = confusion_matrix(&[0, 0, 1, 1], &[1, 1, 0, -1]).unwrap();
        let (_, mapping) = auto_reorder_columns(&t);
        let other = confusion_matrix(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap();
        let r = apply_column_mapping(&other, &mapping);
        assert_eq!(r.col_labels, vec![1, 0]);
        assert_eq!(r.counts, vec![vec![2, 0], vec![0, 2]]);
    }

    #[test]
    fn perfect_scores() {
        let s = score_labeling(&[0, 0, 1, 1, 2, 2, 2], &[5, 5, 3, 3, -1, -1, -1]).unwrap();
        for v in [s.ari, s.ami, s.v_measure, s.fowlkes_mallows] {
            assert!((v - 1.0).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn single_predicted_cluster() {
        let s = score_labeling(&[0, 0, 1, 1], &[7, 7, 7, 7]).unwrap();
        assert!(s.ari.abs() < 1e-15);
        assert!((s.fowlkes_mallows - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(s.ami.abs() < 1e-12);
        assert_eq!(s.v_measure, 0.0);
    }

    #[test]
    fn table_row_format() {
        let s = ScoreCard {
            ari: 0.756,
            ami: 0.83,
            v_measure: 0.8349,
            fowlkes_mallows: 0.79,
        };
        assert_eq!(s.table_row("toy"), "| toy | 0.76 | 0.83 | 0.83 | 0.79 |");
    }
}
