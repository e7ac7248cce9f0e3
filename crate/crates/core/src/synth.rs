//! Seeded 2-D benchmark: nine Gaussian blobs on a 3x3 grid plus uniform background noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureTable;
use crate::segment::NOISE;

/// Geometry of the benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    pub points_per_cluster: usize,
    pub noise_points: usize,
    pub centers: Vec<[f64; 2]>,
    /// Standard deviation of each blob, one per center.
    pub sigmas: Vec<f64>,
    /// Noise bounding box `[x_min, y_min, x_max, y_max]`.
    pub noise_box: [f64; 4],
    pub seed: u64,
}

impl ToySpec {
    pub const GRID_SPACING: f64 = 10.0;

    pub fn with_seed(seed: u64) -> Self {
        ToySpec {
            seed,
            ..Default::default()
        }
    }

    pub fn total_points(&self) -> usize {
        self.points_per_cluster * self.centers.len() + self.noise_points
    }
}

impl Default for ToySpec {
    fn default() -> Self {
        let g = Self::GRID_SPACING;
        let centers = (0..9)
            .map(|k| [(k % 3) as f64 * g, (k / 3) as f64 * g])
            .collect();
        ToySpec {
            points_per_cluster: 500,
            noise_points: 900,
            centers,
            sigmas: vec![0.8, 1.12, 0.64, 0.96, 1.28, 0.72, 1.2, 0.88, 1.04],
            noise_box: [-1.1 * g, -1.1 * g, 3.1 * g, 3.1 * g],
            seed: 1,
        }
    }
}

/// Generates the points (clusters first, in center order, then noise) and their labels;
/// noise is labeled `-1`.
pub fn generate_toy(spec: &ToySpec) -> Result<(FeatureTable, Vec<i64>)> {
    if spec.centers.len() != spec.sigmas.len() {
        return Err(Error::param("sigmas", "one standard deviation per center is required"));
    }
    if let Some(s) = spec.sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::param("sigmas", format!("invalid standard deviation {s}")));
    }
    let [x0, y0, x1, y1] = spec.noise_box;
    if !(x0 < x1 && y0 < y1) {
        return Err(Error::param("noise_box", "empty box"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.total_points());
    let mut labels = Vec::with_capacity(spec.total_points());
    for (k, (c, &s)) in spec.centers.iter().zip(&spec.sigmas).enumerate() {
        let normal = Normal::new(0.0, s).expect("validated sigma");
        for _ in 0..spec.points_per_cluster {
            rows.push(vec![c[0] + normal.sample(&mut rng), c[1] + normal.sample(&mut rng)]);
            labels.push(k as i64);
        }
    }
    for _ in 0..spec.noise_points {
        rows.push(vec![rng.random_range(x0..x1), rng.random_range(y0..y1)]);
        labels.push(NOISE);
    }
    Ok((FeatureTable::new(&rows)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_labels() {
        let (t, labels) = generate_toy(&ToySpec::default()).unwrap();
        assert_eq!(t.n_rows(), 5400);
        assert_eq!(t.n_features(), 2);
        for k in 0..9 {
            assert_eq!(labels.iter().filter(|&&l| l == k).count(), 500);
        }
        assert_eq!(labels.iter().filter(|&&l| l == NOISE).count(), 900);
    }

    #[test]
    fn seeded() {
        let a = generate_toy(&ToySpec::with_seed(3)).unwrap();
        let b = generate_toy(&ToySpec::with_seed(3)).unwrap();
        let c = generate_toy(&ToySpec::with_seed(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn zero_sigma_collapses_to_center() {
        let spec = ToySpec {
            sigmas: vec![0.0; 9],
            ..Default::default()
        };
        let (t, _) = generate_toy(&spec).unwrap();
        for k in 0..9 {
            for r in k * 500..(k + 1) * 500 {
                assert_eq!(t.row(r), &spec.centers[k]);
            }
        }
    }

    #[test]
    fn grid_is_well_separated() {
        let spec = ToySpec::default();
        let largest = spec.sigmas.iter().copied().fold(0.0, f64::max);
        assert!(ToySpec::GRID_SPACING >= 6.0 * largest);
    }

    #[test]
    fn sample_means_near_centers() {
        let spec = ToySpec::default();
        let (t, _) = generate_toy(&spec).unwrap();
        for (k, c) in spec.centers.iter().enumerate() {
            for axis in 0..2 {
                let mean: f64 = (k * 500..(k + 1) * 500).map(|r| t.row(r)[axis]).sum::<f64>() / 500.0;
                assert!((mean - c[axis]).abs() < 5.0 * spec.sigmas[k] / 500f64.sqrt());
            }
        }
    }
}
