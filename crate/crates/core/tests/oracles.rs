//! Production code against small, independent brute-force reimplementations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chainclust::evaluate::{adjusted_mutual_information, adjusted_rand_index, fowlkes_mallows, homogeneity_completeness_v};
use chainclust::pipeline::{autopilot, segment, Config};
use chainclust::reorder::reorder_from;
use chainclust::{
    compute_delta_profile, confusion_matrix, delta_profile_for_order, nearest_neighbor_chain, select_best_start,
    DistanceMatrix, Execution, Precision, Stencil,
};

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, precision: Precision) -> DistanceMatrix {
    let upper: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..10.0)).collect();
    DistanceMatrix::from_upper(n, precision, |i, j| upper[i * n + j]).unwrap()
}

/// Greedy chain by scanning every unvisited element at each step.
fn chain_oracle(m: &DistanceMatrix, start: usize) -> Vec<usize> {
    let n = m.n();
    let mut visited = vec![false; n];
    let mut order = vec![start];
    visited[start] = true;
    while order.len() < n {
        let cur = *order.last().unwrap();
        let mut best: Option<usize> = None;
        for j in 0..n {
            if visited[j] {
                continue;
            }
            if best.is_none_or(|b| m.get(cur, j) < m.get(cur, b)) {
                best = Some(j);
            }
        }
        let b = best.unwrap();
        visited[b] = true;
        order.push(b);
    }
    order
}

/// Four sub-square means at every position of the valid window.
fn delta_oracle(m: &DistanceMatrix, order: &[usize], s: usize) -> Vec<f64> {
    let n = m.n();
    let d = |a: usize, b: usize| m.get(order[a], order[b]);
    let mean = |r0: usize, c0: usize| {
        let mut sum = 0.0;
        for a in r0..r0 + s {
            for b in c0..c0 + s {
                sum += d(a, b);
            }
        }
        sum / (s * s) as f64
    };
    (s..=n - s)
        .map(|i| mean(i - s, i) + mean(i, i - s) - mean(i - s, i - s) - mean(i, i))
        .collect()
}

fn random_sizes(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let n = rng.random_range(4..=40);
    let s = rng.random_range(1..=n / 2);
    (n, s)
}

#[test]
fn chain_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..50 {
        let n = rng.random_range(2..=40);
        let precision = if case % 2 == 0 { Precision::F32 } else { Precision::F64 };
        let m = random_matrix(&mut rng, n, precision);
        for start in [0, n / 2, n - 1] {
            assert_eq!(nearest_neighbor_chain(&m, start).unwrap(), chain_oracle(&m, start), "case {case}");
        }
    }
}

#[test]
fn chain_ties_go_to_the_smallest_index() {
    // all distances equal: every step picks the smallest unvisited index
    let m = DistanceMatrix::from_upper(7, Precision::F32, |_, _| 1.0).unwrap();
    assert_eq!(nearest_neighbor_chain(&m, 4).unwrap(), vec![4, 0, 1, 2, 3, 5, 6]);
    assert_eq!(nearest_neighbor_chain(&m, 4).unwrap(), chain_oracle(&m, 4));
}

#[test]
fn delta_matches_four_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..50 {
        let (n, s) = random_sizes(&mut rng);
        let m = random_matrix(&mut rng, n, Precision::F32);
        let order = chain_oracle(&m, rng.random_range(0..n));
        let expected = delta_oracle(&m, &order, s);
        let stencil = Stencil::with_half_width(s, n).unwrap();
        let direct = delta_profile_for_order(&m, &order, stencil).unwrap();
        let permuted = compute_delta_profile(&m.permuted(&order).unwrap(), stencil).unwrap();
        assert_eq!(direct.values(), &expected[..], "case {case}");
        assert_eq!(permuted.values(), &expected[..], "case {case}");
        assert_eq!(direct.integral(), expected.iter().sum::<f64>());
    }
}

#[test]
fn delta_matches_oracle_on_30x30() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for s in 1..=15 {
        let m = random_matrix(&mut rng, 30, Precision::F64);
        let order: Vec<usize> = (0..30).collect();
        let p = compute_delta_profile(&m, Stencil::with_half_width(s, 30).unwrap()).unwrap();
        assert_eq!(p.values(), &delta_oracle(&m, &order, s)[..]);
    }
}

#[test]
fn best_start_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let (n, s) = random_sizes(&mut rng);
        let m = random_matrix(&mut rng, n, Precision::F32);
        let stencil = Stencil::with_half_width(s, n).unwrap();
        let (mut best_start, mut best) = (0, f64::INFINITY);
        for start in 0..n {
            let integral: f64 = delta_oracle(&m, &chain_oracle(&m, start), s).iter().sum();
            if integral < best {
                (best_start, best) = (start, integral);
            }
        }
        let starts: Vec<usize> = (0..n).collect();
        for execution in [Execution::Serial, Execution::Parallel] {
            let r = select_best_start(&m, &starts, stencil, execution).unwrap();
            assert_eq!((r.start, r.delta_integral), (best_start, best));
            assert_eq!(r, reorder_from(&m, best_start, stencil).unwrap());
        }
    }
}

fn two_blocks() -> DistanceMatrix {
    DistanceMatrix::from_upper(6, Precision::F32, |i, j| if (i < 3) == (j < 3) { 1.0 } else { 10.0 }).unwrap()
}

#[test]
fn two_block_case_by_hand() {
    let m = two_blocks();
    assert_eq!(nearest_neighbor_chain(&m, 0).unwrap(), vec![0, 1, 2, 3, 4, 5]);
    let stencil = Stencil::with_half_width(1, 6).unwrap();
    let p = compute_delta_profile(&m, stencil).unwrap();
    assert_eq!(p.values(), &[2.0, 2.0, 20.0, 2.0, 2.0]);

    // every start gives the same integral, so the smallest start wins
    let all: Vec<usize> = (0..6).collect();
    let r = select_best_start(&m, &all, stencil, Execution::Serial).unwrap();
    assert_eq!(r.start, 0);
    let exhaustive = (0..6)
        .map(|s| delta_oracle(&m, &chain_oracle(&m, s), 1).iter().sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(r.delta_integral, exhaustive);

    let cfg = Config {
        stencil_pct: 100.0 / 3.0 * 0.5,
        ..Config::default()
    };
    assert_eq!(cfg.stencil(6).unwrap().half_width(), 1);
    let seg = segment(&m, &r.order, &cfg).unwrap();
    assert_eq!(seg.clusters.n_clusters(), 2);
    let run = autopilot(&m, &cfg, Execution::Serial).unwrap();
    assert_eq!(run.merged.n_clusters(), 2);
}

#[test]
fn two_block_scan_matches_exhaustive_threshold_search() {
    // oracle: every distinct threshold between profile values, scored by hand
    let m = two_blocks();
    let values = [2.0, 2.0, 20.0, 2.0, 2.0];
    let mut best = (f64::NEG_INFINITY, 0usize);
    for t in [2.0, 2.5, 20.0, 20.5] {
        // runs of positions 1..=5 with value < t, length >= 2
        let mut runs: Vec<Vec<usize>> = Vec::new();
        let mut cur: Vec<usize> = Vec::new();
        for (k, &v) in values.iter().enumerate() {
            if v < t {
                cur.push(k + 1);
            } else if !cur.is_empty() {
                runs.push(std::mem::take(&mut cur));
            }
        }
        runs.push(cur);
        runs.retain(|r| r.len() >= 2);
        let score: f64 = runs
            .iter()
            .map(|r| {
                let d: Vec<f64> = (0..r.len())
                    .flat_map(|a| (a + 1..r.len()).map(move |b| (a, b)))
                    .map(|(a, b)| m.get(r[a], r[b]))
                    .collect();
                let mean = d.iter().sum::<f64>() / d.len() as f64;
                let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d.len() as f64;
                r.len() as f64 / var.max(1e-12 * mean)
            })
            .sum();
        if score > best.0 {
            best = (score, runs.len());
        }
    }
    assert_eq!(best.1, 2);
    let cfg = Config {
        stencil_pct: 16.0,
        ..Config::default()
    };
    let seg = segment(&m, &[0, 1, 2, 3, 4, 5], &cfg).unwrap();
    assert_eq!(seg.clusters.n_clusters(), 2);
    let sizes: Vec<usize> = seg.clusters.clusters().iter().map(|c| c.size()).collect();
    assert_eq!(sizes, vec![2, 2]);
}

/// Pair counts by enumerating every pair: (together in both, together in truth,
/// together in prediction, all pairs).
fn pair_oracle(truth: &[i64], pred: &[i64]) -> (f64, f64, f64, f64) {
    let (mut both, mut t, mut p, mut total) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..truth.len() {
        for j in i + 1..truth.len() {
            let st = truth[i] == truth[j];
            let sp = pred[i] == pred[j];
            both += (st && sp) as u64;
            t += st as u64;
            p += sp as u64;
            total += 1;
        }
    }
    (both as f64, t as f64, p as f64, total as f64)
}

fn ari_oracle(truth: &[i64], pred: &[i64]) -> f64 {
    let (both, t, p, total) = pair_oracle(truth, pred);
    let expected = t * p / total;
    let max = (t + p) / 2.0;
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

fn fm_oracle(truth: &[i64], pred: &[i64]) -> f64 {
    let (both, t, p, _) = pair_oracle(truth, pred);
    if both == 0.0 {
        return 0.0;
    }
    both / (t * p).sqrt()
}

#[test]
fn ari_and_fm_match_pair_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..50 {
        let n = rng.random_range(2..=200);
        let kt = rng.random_range(1..=8);
        let kp = rng.random_range(1..=8);
        let truth: Vec<i64> = (0..n).map(|_| rng.random_range(-1..kt)).collect();
        let pred: Vec<i64> = (0..n).map(|_| rng.random_range(-1..kp)).collect();
        let t = confusion_matrix(&truth, &pred).unwrap();
        assert_eq!(adjusted_rand_index(&t), ari_oracle(&truth, &pred));
        assert_eq!(fowlkes_mallows(&t), fm_oracle(&truth, &pred));
    }
}

#[test]
fn hand_computed_pair_scores() {
    let t = confusion_matrix(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap();
    assert_eq!(adjusted_rand_index(&t), 0.0);
    assert!((fowlkes_mallows(&t) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
}

/// Scores computed by scikit-learn 1.7.2 on the same label vectors (AMI with
/// `average_method="max"`).
struct Reference {
    truth: &'static [i64],
    pred: &'static [i64],
    ari: f64,
    ami: f64,
    fm: f64,
    homogeneity: f64,
    completeness: f64,
    v: f64,
}

const REFERENCES: [Reference; 4] = [
    Reference {
        truth: &[0, 0, 0, 1, 1, 1, 2, 2, 2, -1, -1, -1],
        pred: &[0, 0, 1, 1, 1, 2, 2, 2, -1, -1, 0, -1],
        ari: 0.18518518518518517,
        ami: 0.2527328885959867,
        fm: 0.3333333333333333,
        homogeneity: 0.5408520829727552,
        completeness: 0.5408520829727552,
        v: 0.5408520829727552,
    },
    Reference {
        truth: &[0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 5, 5, -1, -1],
        pred: &[1, 1, 1, 0, 0, 0, 2, 2, 2, 3, 3, 3, -1, -1, -1, -1],
        ari: 0.3181818181818182,
        ami: 0.3606024976282234,
        fm: 0.408248290463863,
        homogeneity: 0.6586465907124118,
        completeness: 0.7836694793634988,
        v: 0.7157394159810936,
    },
    Reference {
        truth: &[3, 3, 3, 3, 7, 7, 7, 7, 7, 1, 1],
        pred: &[0; 11],
        ari: 0.0,
        ami: 0.0,
        fm: 0.5559594491425693,
        homogeneity: 0.0,
        completeness: 1.0,
        v: 0.0,
    },
    Reference {
        truth: &[0, 1, 2, 3, 4, 5],
        pred: &[0, 0, 1, 1, 2, 2],
        ari: 0.0,
        ami: 3.203426503814919e-16,
        fm: 0.0,
        homogeneity: 0.6131471927654586,
        completeness: 1.0000000000000002,
        v: 0.7601875334318687,
    },
];

#[test]
fn entropy_scores_match_reference_values() {
    for (k, r) in REFERENCES.iter().enumerate() {
        let t = confusion_matrix(r.truth, r.pred).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(adjusted_rand_index(&t), r.ari), "ari {k}");
        assert!(close(fowlkes_mallows(&t), r.fm), "fm {k}");
        assert!(close(adjusted_mutual_information(&t), r.ami), "ami {k}: {}", adjusted_mutual_information(&t));
        let (h, c, v) = homogeneity_completeness_v(&t);
        assert!(close(h, r.homogeneity) && close(c, r.completeness) && close(v, r.v), "hcv {k}: {h} {c} {v}");
    }
}
