//! Scans cutoff thresholds over a profile, prints the score curve and extracts the clusters
//! at the chosen threshold.

use chainclust::export::scan_csv;
use chainclust::pipeline::{choose_reordering, segment};
use chainclust::{compute_distance_matrix, generate_toy, Config, Execution, Precision, StartStrategy, ToySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ToySpec { points_per_cluster: 60, noise_points: 100, ..ToySpec::default() };
    let (points, _) = generate_toy(&spec)?;
    let m = compute_distance_matrix(&points, Precision::F32)?;
    let cfg = Config { starts: StartStrategy::EvenlySpaced { k: 10 }, n_candidates: 40, ..Config::default() };

    let reordering = choose_reordering(&m, &cfg, Execution::Parallel)?;
    let seg = segment(&m, &reordering.order, &cfg)?;
    print!("{}", scan_csv(&seg.scan));
    println!(
        "chosen cutoff {:.3}: {} clusters, {:.1}% noise",
        seg.scan.chosen,
        seg.clusters.n_clusters(),
        100.0 * seg.clusters.noise_fraction()
    );
    for (j, c) in seg.clusters.clusters().iter().enumerate() {
        println!("cluster {j}: positions {:?}, {} members", c.ranges, c.size());
    }
    Ok(())
}
