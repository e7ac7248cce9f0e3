//! The diagonal stencil statistic.
//!
//! At reordered position `i` the stencil is four `s x s` sub-squares meeting at the
//! diagonal point `(i, i)`: two diagonal blocks `[i-s, i)^2` and `[i, i+s)^2`, and the two
//! off-diagonal blocks between them. The statistic is the sum of the off-diagonal block
//! means minus the sum of the diagonal block means. It is small when the whole stencil
//! sits inside one cluster and peaks where the chain crosses between clusters.
//!
//! It is defined for `i` in `[s, n - s]`; everything outside that window is treated as
//! noise downstream.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{with_storage, DistanceMatrix, Scalar};

/// Default stencil size in percent of the element count (both diagonal sub-squares).
pub const DEFAULT_STENCIL_PCT: f64 = 1.0;

/// Side length of one stencil sub-square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stencil {
    half_width: usize,
}

impl Stencil {
    /// `s = max(1, round(pct / 100 * n / 2))`.
    pub fn from_percent(pct: f64, n: usize) -> Result<Self> {
        if !(pct.is_finite() && pct > 0.0) {
            return Err(Error::param("stencil_pct", format!("must be positive, got {pct}")));
        }
        let s = ((pct / 100.0 * n as f64 / 2.0).round() as usize).max(1);
        Self::with_half_width(s, n)
    }

    pub fn with_half_width(half_width: usize, n: usize) -> Result<Self> {
        if half_width == 0 || n < 2 * half_width {
            return Err(Error::StencilTooLarge { n, half_width });
        }
        Ok(Stencil { half_width })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }
}

/// Stencil statistic along one reordered matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaProfile {
    n: usize,
    half_width: usize,
    /// One value per position of the valid window, starting at position `half_width`.
    values: Vec<f64>,
    integral: f64,
}

impl DeltaProfile {
    /// Rebuilds a profile from previously exported values.
    pub fn from_values(n: usize, half_width: usize, values: Vec<f64>) -> Result<Self> {
        Stencil::with_half_width(half_width, n)?;
        if values.len() != n - 2 * half_width + 1 {
            return Err(Error::param(
                "values",
                format!(
                    "expected {} values for n={n}, s={half_width}, got {}",
                    n - 2 * half_width + 1,
                    values.len()
                ),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("non-finite value {v}")));
        }
        let integral = values.iter().sum();
        Ok(DeltaProfile {
            n,
            half_width,
            values,
            integral,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Positions carrying a value, `[s, n - s]`.
    pub fn window(&self) -> RangeInclusive<usize> {
        self.half_width..=self.n - self.half_width
    }

    /// Values over the valid window, in position order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, position: usize) -> Option<f64> {
        position
            .checked_sub(self.half_width)
            .and_then(|k| self.values.get(k).copied())
    }

    /// `(position, value)` pairs over the valid window.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k + self.half_width, v))
    }

    /// Sum of all values.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[inline(always)]
fn block_mean<F: Fn(usize, usize) -> f64>(
    at: &F,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
) -> f64 {
    let count = (rows.len() * cols.len()) as f64;
    let mut sum = 0.0;
    for a in rows {
        for b in cols.clone() {
            sum += at(a, b);
        }
    }
    sum / count
}

pub(crate) fn stencil_values<F: Fn(usize, usize) -> f64>(n: usize, s: usize, at: F) -> Vec<f64> {
    (s..=n - s)
        .map(|i| {
            let before = i - s..i;
            let after = i..i + s;
            let m1 = block_mean(&at, before.clone(), before.clone());
            let m2 = block_mean(&at, before.clone(), after.clone());
            let m3 = block_mean(&at, after.clone(), before);
            let m4 = block_mean(&at, after.clone(), after);
            m2 + m3 - m1 - m4
        })
        .collect()
}

/// Computes the stencil statistic on an already permuted matrix.
pub fn compute_delta_profile(pm: &DistanceMatrix, stencil: Stencil) -> Result<DeltaProfile> {
    let n = pm.n();
    let s = stencil.half_width;
    Stencil::with_half_width(s, n)?;
    let values = with_storage!(pm, v => stencil_values(n, s, |a, b| v[a * n + b].to_f64()));
    DeltaProfile::from_values(n, s, values)
}

/// Computes the statistic for `order` without materialising the permuted matrix.
/// Bit-identical to [`compute_delta_profile`] on `m.permuted(order)`.
pub fn delta_profile_for_order(
    m: &DistanceMatrix,
    order: &[usize],
    stencil: Stencil,
) -> Result<DeltaProfile> {
    let n = m.n();
    let s = stencil.half_width;
    Stencil::with_half_width(s, n)?;
    crate::matrix::check_permutation(order, n)?;
    let values = with_storage!(m, v => stencil_values(n, s, |a, b| v[order[a] * n + order[b]].to_f64()));
    DeltaProfile::from_values(n, s, values)
}
