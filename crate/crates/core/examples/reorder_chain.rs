//! Chains elements greedily from several starts and keeps the ordering whose stencil
//! integral is smallest.

use chainclust::reorder::enumerate_starts;
use chainclust::{
    compute_distance_matrix, generate_toy, nearest_neighbor_chain, select_best_start, Execution, Precision,
    StartStrategy, Stencil, ToySpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ToySpec { points_per_cluster: 30, noise_points: 30, ..ToySpec::default() };
    let (points, _) = generate_toy(&spec)?;
    let m = compute_distance_matrix(&points, Precision::F32)?;

    let order = nearest_neighbor_chain(&m, 0)?;
    println!("chain from 0 begins {:?}", &order[..10]);

    let stencil = Stencil::from_percent(2.0, m.n())?;
    let starts = enumerate_starts(&StartStrategy::EvenlySpaced { k: 20 }, &m, None)?;
    let best = select_best_start(&m, &starts, stencil, Execution::Parallel)?;
    println!(
        "best of {} starts: {} (integral {:.2}, half width {})",
        starts.len(),
        best.start,
        best.delta_integral,
        stencil.half_width()
    );
    Ok(())
}
