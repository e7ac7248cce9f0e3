//! Feature tables and square distance matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating-point width used to store distances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" | "32" => Ok(Precision::F32),
            "f64" | "64" => Ok(Precision::F64),
            other => Err(Error::param("precision", format!("expected f32 or f64, got {other:?}"))),
        }
    }
}

/// Element type of a matrix storage buffer.
pub(crate) trait Scalar: Copy + PartialOrd + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Scalar for f32 {
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Storage {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

/// Runs `$body` with `$v` bound to the typed storage slice of `$m`.
macro_rules! with_storage {
    ($m:expr, $v:ident => $body:expr) => {
        match &$m.storage {
            $crate::matrix::Storage::F32($v) => $body,
            $crate::matrix::Storage::F64($v) => $body,
        }
    };
}
pub(crate) use with_storage;

/// A symmetric, nonnegative, zero-diagonal `n x n` matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    pub(crate) storage: Storage,
}

impl DistanceMatrix {
    /// Builds a matrix from a generator that is only called for `i < j`; the
    /// lower triangle is mirrored and the diagonal set to zero.
    pub fn from_upper<F>(n: usize, precision: Precision, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        if n < 2 {
            return Err(Error::TooFewElements(n));
        }
        fn fill<T: Scalar>(
            n: usize,
            f: &mut dyn FnMut(usize, usize) -> f64,
        ) -> Result<Vec<T>> {
            let mut data = vec![T::from_f64(0.0); n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let v = f(i, j);
                    check_entry(i, j, v)?;
                    let t = T::from_f64(v);
                    if !t.to_f64().is_finite() {
                        return Err(Error::NonFinite {
                            row: i,
                            column: j,
                            value: t.to_f64(),
                        });
                    }
                    data[i * n + j] = t;
                    data[j * n + i] = t;
                }
            }
            Ok(data)
        }
        let storage = match precision {
            Precision::F32 => Storage::F32(fill(n, &mut f)?),
            Precision::F64 => Storage::F64(fill(n, &mut f)?),
        };
        Ok(DistanceMatrix { n, storage })
    }

    /// Builds a matrix from full rows, requiring exact symmetry.
    pub fn from_rows(rows: &[Vec<f64>], precision: Precision) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidMatrix(format!("diagonal entry {i} is {}", row[i])));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::AsymmetricMatrix {
                        i,
                        j,
                        a: rows[i][j],
                        b: rows[j][i],
                    });
                }
            }
        }
        Self::from_upper(n, precision, |i, j| rows[i][j])
    }

    pub(crate) fn from_f32_unchecked(n: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        DistanceMatrix {
            n,
            storage: Storage::F32(data),
        }
    }

    /// Number of elements.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn precision(&self) -> Precision {
        match self.storage {
            Storage::F32(_) => Precision::F32,
            Storage::F64(_) => Precision::F64,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        with_storage!(self, v => v[i * n + j].to_f64())
    }

    /// Row `i` widened to `f64`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let n = self.n;
        with_storage!(self, v => v[i * n..(i + 1) * n].iter().map(|x| x.to_f64()).collect())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    /// Largest entry.
    pub fn max(&self) -> f64 {
        with_storage!(self, v => v.iter().fold(0.0f64, |acc, x| acc.max(x.to_f64())))
    }

    /// Every entry multiplied by `factor` (must be finite and positive).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::param("factor", "must be finite and positive"));
        }
        Self::from_upper(self.n, self.precision(), |i, j| self.get(i, j) * factor)
    }

    /// Same values stored at another precision.
    pub fn with_precision(&self, precision: Precision) -> Self {
        if precision == self.precision() {
            return self.clone();
        }
        Self::from_upper(self.n, precision, |i, j| self.get(i, j))
            .expect("a valid matrix stays valid when converted")
    }

    /// The matrix with rows and columns permuted: `out[i][j] = self[order[i]][order[j]]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.n)?;
        let n = self.n;
        fn permute<T: Scalar>(v: &[T], n: usize, order: &[usize]) -> Vec<T> {
            let mut out = Vec::with_capacity(n * n);
            for &oi in order {
                let row = &v[oi * n..(oi + 1) * n];
                out.extend(order.iter().map(|&oj| row[oj]));
            }
            out
        }
        let storage = match &self.storage {
            Storage::F32(v) => Storage::F32(permute(v, n, order)),
            Storage::F64(v) => Storage::F64(permute(v, n, order)),
        };
        Ok(DistanceMatrix { n, storage })
    }

    /// Entries as `f32`, row-major.
    pub fn to_f32_vec(&self) -> Vec<f32> {
        with_storage!(self, v => v.iter().map(|x| x.to_f64() as f32).collect())
    }
}

fn check_entry(i: usize, j: usize, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite {
            row: i,
            column: j,
            value: v,
        });
    }
    if v < 0.0 {
        return Err(Error::InvalidMatrix(format!("negative distance {v} at ({i}, {j})")));
    }
    Ok(())
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::param(
            "order",
            format!("length {} does not match {n} elements", order.len()),
        ));
    }
    let mut seen = vec![false; n];
    for &o in order {
        if o >= n || std::mem::replace(&mut seen[o], true) {
            return Err(Error::param("order", format!("not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// `N` element records with `F` numeric features each, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    n: usize,
    f: usize,
    data: Vec<f64>,
}

impl FeatureTable {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::TooFewElements(n));
        }
        let f = rows[0].len();
        if f == 0 {
            return Err(Error::Empty("feature table has no columns"));
        }
        let mut data = Vec::with_capacity(n * f);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != f {
                return Err(Error::RaggedRow {
                    line: r + 1,
                    expected: f,
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: r,
                        column: c,
                        value: v,
                    });
                }
            }
            data.extend_from_slice(row);
        }
        Ok(FeatureTable { n, f, data })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.f
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.f..(i + 1) * self.f]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.f)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows().map(|r| r[c]).collect()
    }
}

/// Z-scores every column with the population standard deviation.
/// Constant columns become all zeros.
pub fn standardize(table: &FeatureTable) -> FeatureTable {
    let (n, f) = (table.n, table.f);
    let mut data = table.data.clone();
    for c in 0..f {
        let mean = table.rows().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = table.rows().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for r in 0..n {
            let v = &mut data[r * f + c];
            *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
        }
    }
    FeatureTable { n, f, data }
}

/// Euclidean distance between two feature rows.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise Euclidean distances between the rows of `table`.
pub fn compute_distance_matrix(table: &FeatureTable, precision: Precision) -> Result<DistanceMatrix> {
    DistanceMatrix::from_upper(table.n, precision, |i, j| {
        euclidean(table.row(i), table.row(j))
    })
}

/// Row-at-a-time variant of [`compute_distance_matrix`] that never holds more than one
/// row of `f64` scratch. Produces the same bits.
pub fn compute_distance_matrix_streaming(
    table: &FeatureTable,
    precision: Precision,
) -> Result<DistanceMatrix> {
    let n = table.n;
    if n < 2 {
        return Err(Error::TooFewElements(n));
    }
    fn fill<T: Scalar>(table: &FeatureTable) -> Result<Vec<T>> {
        let n = table.n;
        let mut data = vec![T::from_f64(0.0); n * n];
        let mut scratch = vec![0.0f64; n];
        for i in 0..n {
            let a = table.row(i);
            for (j, s) in scratch.iter_mut().enumerate() {
                *s = euclidean(a, table.row(j));
            }
            for (j, &v) in scratch.iter().enumerate() {
                if i == j {
                    continue;
                }
                let t = T::from_f64(v);
                if !t.to_f64().is_finite() {
                    return Err(Error::NonFinite {
                        row: i,
                        column: j,
                        value: v,
                    });
                }
                data[i * n + j] = t;
            }
        }
        Ok(data)
    }
    let storage = match precision {
        Precision::F32 => Storage::F32(fill(table)?),
        Precision::F64 => Storage::F64(fill(table)?),
    };
    Ok(DistanceMatrix { n, storage })
}
