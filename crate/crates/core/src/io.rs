//! Text-table loading with distance-matrix auto-detection, and the binary matrix format.
//!
//! Binary layout: the 4-byte magic `RCM1`, the element count `n` as a little-endian
//! `u64`, then `n * n` little-endian IEEE-754 `f32` values in row-major order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{compute_distance_matrix, standardize, DistanceMatrix, FeatureTable, Precision};

pub const MATRIX_MAGIC: &[u8; 4] = b"RCM1";

/// Absolute tolerance on diagonal entries for a square table to count as a distance matrix.
pub const DIAGONAL_TOLERANCE: f64 = 1e-12;
/// Relative asymmetry above which a detected distance matrix is rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// How to read a delimited numeric table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub delimiter: char,
    pub comments: Vec<char>,
    /// Zero-based columns to keep; `None` keeps all.
    pub use_columns: Option<Vec<usize>>,
    pub precision: Precision,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: ',',
            comments: vec!['@', '#'],
            use_columns: None,
            precision: Precision::F32,
        }
    }
}

/// What a data file turned out to contain.
#[derive(Clone, Debug, PartialEq)]
pub enum Loaded {
    Features(FeatureTable),
    Matrix(DistanceMatrix),
}

impl Loaded {
    /// Resolves to a distance matrix, computing Euclidean distances for feature tables.
    pub fn into_matrix(self, standardize_features: bool, precision: Precision) -> Result<DistanceMatrix> {
        match self {
            Loaded::Matrix(m) => Ok(m),
            Loaded::Features(t) => {
                let t = if standardize_features { standardize(&t) } else { t };
                compute_distance_matrix(&t, precision)
            }
        }
    }
}

/// Parses a delimited numeric table from text at full precision. Everything after a comment
/// character is ignored; blank lines are skipped. `opts.precision` only affects storage.
pub fn parse_table(text: &str, opts: &LoadOptions) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find(|c| opts.comments.contains(&c)) {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if opts.delimiter.is_whitespace() {
            line.split_whitespace().collect()
        } else {
            line.split(opts.delimiter).map(str::trim).collect()
        };
        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(Error::RaggedRow {
                line: lineno + 1,
                expected,
                found: fields.len(),
            });
        }
        let parse = |column: usize| -> Result<f64> {
            let s = fields[column];
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                column,
                value: s.to_string(),
            })
        };
        let row = match &opts.use_columns {
            None => (0..fields.len()).map(parse).collect::<Result<Vec<_>>>()?,
            Some(cols) => cols
                .iter()
                .map(|&c| {
                    if c >= fields.len() {
                        Err(Error::MissingColumn {
                            column: c,
                            available: fields.len(),
                        })
                    } else {
                        parse(c)
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Classifies a parsed table: square with an all-zero diagonal means a distance matrix
/// (symmetrised by averaging), anything else is a feature table.
pub fn classify_table(rows: Vec<Vec<f64>>, precision: Precision) -> Result<Loaded> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewElements(n));
    }
    let square = rows.iter().all(|r| r.len() == n);
    let zero_diagonal = square && (0..n).all(|i| rows[i][i].abs() <= DIAGONAL_TOLERANCE);
    if !zero_diagonal {
        return FeatureTable::new(&rows).map(Loaded::Features);
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (rows[i][j], rows[j][i]);
            let scale = a.abs().max(b.abs());
            if (a - b).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::AsymmetricMatrix { i, j, a, b });
            }
        }
    }
    DistanceMatrix::from_upper(n, precision, |i, j| {
        let (a, b) = (rows[i][j], rows[j][i]);
        if a == b {
            a
        } else {
            (a + b) / 2.0
        }
    })
    .map(Loaded::Matrix)
}

/// Reads a text data file and decides whether it holds features or distances.
pub fn load_data(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    classify_table(parse_table(&text, opts)?, opts.precision)
}

/// Writes the matrix as comma-separated text using shortest round-trip formatting.
pub fn write_matrix_csv(m: &DistanceMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let n = m.n();
    let result: std::io::Result<()> = (|| {
        for i in 0..n {
            let line: Vec<String> = match m.precision() {
                Precision::F32 => (0..n).map(|j| (m.get(i, j) as f32).to_string()).collect(),
                Precision::F64 => (0..n).map(|j| m.get(i, j).to_string()).collect(),
            };
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    })();
    result.map_err(|e| Error::io(path, e))
}

/// Encodes the matrix in the binary format (values narrowed to `f32`).
pub fn encode_matrix(m: &DistanceMatrix) -> Vec<u8> {
    let n = m.n();
    let mut out = Vec::with_capacity(12 + 4 * n * n);
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for v in m.to_f32_vec() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<DistanceMatrix> {
    if bytes.len() < 12 {
        return Err(Error::Truncated {
            expected: 12,
            found: bytes.len() as u64,
        });
    }
    if &bytes[..4] != MATRIX_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    let n = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes"));
    let expected = n
        .checked_mul(n)
        .and_then(|c| c.checked_mul(4))
        .and_then(|c| c.checked_add(12))
        .ok_or_else(|| Error::Format(format!("element count {n} is too large")))?;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::Truncated { expected, found });
    }
    if found > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after {n}x{n} payload",
            found - expected
        )));
    }
    let n = n as usize;
    if n < 2 {
        return Err(Error::TooFewElements(n));
    }
    let data: Vec<f32> = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    for i in 0..n {
        if data[i * n + i] != 0.0 {
            return Err(Error::InvalidMatrix(format!("diagonal entry {i} is {}", data[i * n + i])));
        }
        for j in i + 1..n {
            let (a, b) = (data[i * n + j], data[j * n + i]);
            if !a.is_finite() || a < 0.0 || a != b {
                return Err(Error::InvalidMatrix(format!(
                    "entries ({i}, {j}) = {a} and ({j}, {i}) = {b}"
                )));
            }
        }
    }
    Ok(DistanceMatrix::from_f32_unchecked(n, data))
}

pub fn save_matrix(m: &DistanceMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}

/// Reads one integer label per line from column `column` of a delimited file.
pub fn read_labels(path: impl AsRef<Path>, column: usize, opts: &LoadOptions) -> Result<Vec<i64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, column, opts)
}

pub fn parse_labels(text: &str, column: usize, opts: &LoadOptions) -> Result<Vec<i64>> {
    let opts = LoadOptions {
        use_columns: Some(vec![column]),
        precision: Precision::F64,
        ..opts.clone()
    };
    parse_table(text, &opts)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let v = r[0];
            if v.fract() != 0.0 || v.abs() > i64::MAX as f64 {
                Err(Error::Parse {
                    line: i + 1,
                    column,
                    value: v.to_string(),
                })
            } else {
                Ok(v as i64)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(text: &str) -> Result<Loaded> {
        let opts = LoadOptions::default();
        classify_table(parse_table(text, &opts)?, opts.precision)
    }

    #[test]
    fn detects_distance_matrix() {
        match classify("0,1,2\n1,0,3\n2,3,0\n").unwrap() {
            Loaded::Matrix(m) => assert_eq!(m.n(), 3),
            other => panic!("expected matrix, got {other:?}"),
        }
    }

    #[test]
    fn non_square_is_features() {
        match classify("# x,y\n0,0\n1,0\n@ comment\n0,1\n1,1\n").unwrap() {
            Loaded::Features(t) => {
                assert_eq!(t.n_rows(), 4);
                assert_eq!(t.n_features(), 2);
            }
            other => panic!("expected features, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_square_is_rejected() {
        assert!(matches!(
            classify("0,5\n4,0\n"),
            Err(Error::AsymmetricMatrix { .. })
        ));
    }

    #[test]
    fn tiny_asymmetry_is_averaged() {
        let Loaded::Matrix(m) = classify_table(
            vec![vec![0.0, 1.0], vec![1.0 + 1e-12, 0.0]],
            Precision::F64,
        )
        .unwrap() else {
            panic!()
        };
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert!((m.get(0, 1) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(classify("0,1\n1,x\n"), Err(Error::Parse { line: 2, column: 1, .. })));
        assert!(matches!(classify("0,1\n1\n"), Err(Error::RaggedRow { .. })));
        assert!(matches!(classify(""), Err(Error::TooFewElements(0))));
        assert!(matches!(classify("1,2,3\n"), Err(Error::TooFewElements(1))));
    }

    #[test]
    fn column_selection() {
        let opts = LoadOptions {
            use_columns: Some(vec![1, 2]),
            ..Default::default()
        };
        let rows = parse_table("9,1,2\n9,3,4\n", &opts).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let opts = LoadOptions {
            use_columns: Some(vec![5]),
            ..Default::default()
        };
        assert!(parse_table("1,2\n", &opts).is_err());
    }

    #[test]
    fn binary_round_trip_and_errors() {
        let m = DistanceMatrix::from_rows(
            &[vec![0.0, 0.1, 2.5], vec![0.1, 0.0, 3.0], vec![2.5, 3.0, 0.0]],
            Precision::F32,
        )
        .unwrap();
        let bytes = encode_matrix(&m);
        assert_eq!(&bytes[..4], b"RCM1");
        assert_eq!(bytes.len(), 12 + 9 * 4);
        assert_eq!(decode_matrix(&bytes).unwrap(), m);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_matrix(&bad), Err(Error::Format(_))));

        let mut short = Vec::from(&b"RCM1"[..]);
        short.extend_from_slice(&2u64.to_le_bytes());
        for v in [0.0f32, 1.0, 1.0] {
            short.extend_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(
            decode_matrix(&short),
            Err(Error::Truncated { expected: 28, found: 24 })
        ));
    }

    #[test]
    fn labels_with_comments() {
        let labels = parse_labels("# truth\n0\n1\n-1\n@x\n2\n", 0, &LoadOptions::default()).unwrap();
        assert_eq!(labels, vec![0, 1, -1, 2]);
        let labels = parse_labels("# idx,label\n0,3\n1,-1\n", 1, &LoadOptions::default()).unwrap();
        assert_eq!(labels, vec![3, -1]);
        assert!(parse_labels("0.5\n", 0, &LoadOptions::default()).is_err());
    }
}
