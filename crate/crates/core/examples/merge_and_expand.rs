//! Merges clusters whose off-diagonal zones look like their own interior, then reattaches
//! noise to the nearest medoid for a range of tolerances.

use chainclust::pipeline::{choose_reordering, expand, merge, segment};
use chainclust::refine::zone_table;
use chainclust::{
    compute_distance_matrix, generate_toy, Config, Execution, Expansion, Precision, StartStrategy, ToySpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ToySpec { points_per_cluster: 60, noise_points: 100, ..ToySpec::default() };
    let (points, _) = generate_toy(&spec)?;
    let m = compute_distance_matrix(&points, Precision::F32)?;
    let cfg = Config { starts: StartStrategy::EvenlySpaced { k: 10 }, ..Config::default() };

    let reordering = choose_reordering(&m, &cfg, Execution::Parallel)?;
    let seg = segment(&m, &reordering.order, &cfg)?;
    print!("{}", zone_table(&seg.permuted, &seg.clusters)?.to_csv());

    let (plan, merged) = merge(&seg.permuted, &seg.clusters, &cfg)?;
    println!(
        "alpha {}: pairs {:?}, {} -> {} clusters",
        plan.alpha,
        plan.pairs,
        seg.clusters.n_clusters(),
        merged.n_clusters()
    );

    for beta in [0.0, 1.0, 3.0, f64::INFINITY] {
        let (_, expanded) = expand(&m, &seg.permuted, &merged, Expansion { beta, keep_no_noise: false })?;
        println!("beta {beta:>4}: noise {:.1}%", 100.0 * expanded.noise_fraction());
    }
    Ok(())
}
