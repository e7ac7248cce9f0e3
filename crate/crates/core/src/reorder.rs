//! Greedy nearest-neighbour chain reordering and starting-element selection.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delta::{delta_profile_for_order, Stencil};
use crate::error::{Error, Result};
use crate::matrix::{with_storage, DistanceMatrix, Scalar};
use crate::segment::ClusterSet;

/// A chain ordering of all elements together with the stencil integral it achieves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reordering {
    pub start: usize,
    pub order: Vec<usize>,
    pub delta_integral: f64,
}

impl Reordering {
    /// Wraps an existing order (for instance one read back from disk) and recomputes its
    /// integral.
    pub fn from_order(m: &DistanceMatrix, order: Vec<usize>, stencil: Stencil) -> Result<Self> {
        let profile = delta_profile_for_order(m, &order, stencil)?;
        Ok(Reordering {
            start: order[0],
            order,
            delta_integral: profile.integral(),
        })
    }

    /// Original index to reordered position.
    pub fn positions(&self) -> Vec<usize> {
        inverse_permutation(&self.order)
    }
}

pub(crate) fn inverse_permutation(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (p, &o) in order.iter().enumerate() {
        pos[o] = p;
    }
    pos
}

fn chain<T: Scalar>(v: &[T], n: usize, start: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n);
    order.push(start);
    // Unvisited elements; swap_remove keeps this compact, the explicit index comparison
    // keeps ties on the smallest original index regardless of list order.
    let mut remaining: Vec<usize> = (0..n).filter(|&k| k != start).collect();
    let mut current = start;
    while !remaining.is_empty() {
        let row = &v[current * n..(current + 1) * n];
        let mut best_slot = 0;
        let mut best_idx = remaining[0];
        let mut best = row[best_idx];
        for (slot, &k) in remaining.iter().enumerate().skip(1) {
            let d = row[k];
            if d < best || (d == best && k < best_idx) {
                best = d;
                best_idx = k;
                best_slot = slot;
            }
        }
        remaining.swap_remove(best_slot);
        order.push(best_idx);
        current = best_idx;
    }
    order
}

/// Visits every element once, always stepping to the closest unvisited element
/// (ties go to the smallest original index).
pub fn nearest_neighbor_chain(m: &DistanceMatrix, start: usize) -> Result<Vec<usize>> {
    let n = m.n();
    if start >= n {
        return Err(Error::param("start", format!("{start} is out of range for {n} elements")));
    }
    Ok(with_storage!(m, v => chain(v, n, start)))
}

/// Chain ordering from `start` plus its stencil integral.
pub fn reorder_from(m: &DistanceMatrix, start: usize, stencil: Stencil) -> Result<Reordering> {
    let order = nearest_neighbor_chain(m, start)?;
    Reordering::from_order(m, order, stencil)
}

/// Which starting elements to try for the chain.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StartStrategy {
    First,
    /// Medoids of the clusters found on the first-pass ordering.
    CentroidsOfFirstPass,
    RandomK { k: usize, seed: u64 },
    EvenlySpaced { k: usize },
    #[default]
    All,
    Explicit { indices: Vec<usize> },
}

impl fmt::Display for StartStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartStrategy::First => f.write_str("first"),
            StartStrategy::CentroidsOfFirstPass => f.write_str("centroids"),
            StartStrategy::RandomK { k, seed } => write!(f, "random:{k}:{seed}"),
            StartStrategy::EvenlySpaced { k } => write!(f, "evenly:{k}"),
            StartStrategy::All => f.write_str("all"),
            StartStrategy::Explicit { indices } => {
                let list: Vec<String> = indices.iter().map(usize::to_string).collect();
                write!(f, "explicit:{}", list.join(","))
            }
        }
    }
}

impl FromStr for StartStrategy {
    type Err = Error;

    /// Accepts `first`, `all`, `centroids`, `evenly:K`, `random:K[:SEED]` and
    /// `explicit:I,J,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::param("starts", format!("{reason} in {s:?}"));
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let int = |t: &str| t.trim().parse::<usize>().map_err(|_| bad("expected an integer"));
        match kind {
            "first" => Ok(StartStrategy::First),
            "all" => Ok(StartStrategy::All),
            "centroids" => Ok(StartStrategy::CentroidsOfFirstPass),
            "evenly" => Ok(StartStrategy::EvenlySpaced { k: int(rest)? }),
            "random" => {
                let (k, seed) = rest.split_once(':').unwrap_or((rest, "0"));
                let seed = seed.trim().parse::<u64>().map_err(|_| bad("expected a seed"))?;
                Ok(StartStrategy::RandomK { k: int(k)?, seed })
            }
            "explicit" => Ok(StartStrategy::Explicit {
                indices: rest.split(',').map(int).collect::<Result<_>>()?,
            }),
            _ => Err(bad("unknown strategy")),
        }
    }
}

/// Expands a strategy into concrete starting elements.
///
/// `CentroidsOfFirstPass` needs the clusters found on the first-pass ordering; their
/// medoids (computed on `m`) are the starts.
pub fn enumerate_starts(
    strategy: &StartStrategy,
    m: &DistanceMatrix,
    first_pass: Option<&ClusterSet>,
) -> Result<Vec<usize>> {
    let n = m.n();
    let starts = match strategy {
        StartStrategy::First => vec![0],
        StartStrategy::All => (0..n).collect(),
        StartStrategy::EvenlySpaced { k } => {
            if *k == 0 {
                return Err(Error::param("starts", "k must be at least 1"));
            }
            let mut v: Vec<usize> = (0..*k).map(|i| i * n / k).collect();
            v.dedup();
            v
        }
        StartStrategy::RandomK { k, seed } => {
            if *k == 0 || *k > n {
                return Err(Error::param("starts", format!("k must be in 1..={n}, got {k}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            rand::seq::index::sample(&mut rng, n, *k).into_vec()
        }
        StartStrategy::CentroidsOfFirstPass => {
            let cs = first_pass.ok_or_else(|| {
                Error::param("starts", "centroid starts need first-pass clusters")
            })?;
            (0..cs.n_clusters())
                .map(|j| crate::refine::medoid(m, &cs.members(j)))
                .collect()
        }
        StartStrategy::Explicit { indices } => {
            let mut seen = vec![false; n];
            for &i in indices {
                if i >= n {
                    return Err(Error::param("starts", format!("index {i} out of range for {n} elements")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::param("starts", format!("index {i} given twice")));
                }
            }
            indices.clone()
        }
    };
    if starts.is_empty() {
        return Err(Error::Empty("no starting elements"));
    }
    Ok(starts)
}

/// How independent per-start evaluations are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

fn better(a: &Reordering, b: &Reordering) -> bool {
    match a.delta_integral.total_cmp(&b.delta_integral) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.start < b.start,
    }
}

/// Reorders from every start and keeps the one with the smallest stencil integral
/// (ties go to the smallest start index).
pub fn select_best_start(
    m: &DistanceMatrix,
    starts: &[usize],
    stencil: Stencil,
    execution: Execution,
) -> Result<Reordering> {
    if starts.is_empty() {
        return Err(Error::Empty("no starting elements"));
    }
    let pick = |a: Reordering, b: Reordering| if better(&b, &a) { b } else { a };
    let best = match execution {
        Execution::Serial => starts
            .iter()
            .map(|&s| reorder_from(m, s, stencil))
            .try_fold(None, |acc: Option<Reordering>, r| {
                let r = r?;
                Ok::<_, Error>(Some(match acc {
                    None => r,
                    Some(a) => pick(a, r),
                }))
            })?,
        Execution::Parallel => starts
            .par_iter()
            .map(|&s| reorder_from(m, s, stencil))
            .try_reduce_with(|a, b| Ok(pick(a, b)))
            .transpose()?,
    };
    Ok(best.expect("starts is nonempty"))
}

/// The matrix seen through a reordering.
pub fn permuted_matrix(m: &DistanceMatrix, r: &Reordering) -> Result<DistanceMatrix> {
    m.permuted(&r.order)
}
