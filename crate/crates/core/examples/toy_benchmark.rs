//! Generates the nine-blob benchmark, clusters it with the default settings and scores the
//! result against the generator labels, then sweeps the expansion tolerance.
//!
//! Usage: `cargo run --release -p chainclust --example toy_benchmark -- [SEED] [STARTS]`
//! where STARTS uses the CLI syntax (`all`, `evenly:100`, `first`, ...).

use std::time::Instant;

use chainclust::pipeline::expand;
use chainclust::{
    autopilot, compute_distance_matrix, generate_toy, score_labeling, Config, Execution, Expansion, Precision,
    ScoreCard, ToySpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let starts = args.next().map(|s| s.parse()).transpose()?.unwrap_or_default();

    let (points, truth) = generate_toy(&ToySpec::with_seed(seed))?;
    let m = compute_distance_matrix(&points, Precision::F32)?;
    let cfg = Config {
        starts,
        ..Config::default()
    };

    let clock = Instant::now();
    let run = autopilot(&m, &cfg, Execution::Parallel)?;
    println!("{}", run.summary());
    println!("starts: {} ({:.1} s)", cfg.starts, clock.elapsed().as_secs_f64());

    println!("{}", ScoreCard::TABLE_HEADER);
    println!("{}", score_labeling(&truth, run.expanded.labels())?.table_row("toy"));

    for beta in [1.0, 2.0, 3.0, 5.0, 10.0] {
        let rule = Expansion {
            beta,
            keep_no_noise: false,
        };
        let (_, expanded) = expand(&m, &run.segmentation.permuted, &run.merged, rule)?;
        println!("beta {beta:>4}: noise {:.1}%", 100.0 * expanded.noise_fraction());
    }
    Ok(())
}
