//! Reads a delimited file and lets the loader decide whether it holds feature rows or a
//! distance matrix, then round-trips the matrix through the binary format.
//!
//! Usage: `cargo run -p chainclust --example load_and_detect -- [FILE]`

use chainclust::export::features_csv;
use chainclust::io::{save_matrix, write_matrix_csv};
use chainclust::{generate_toy, load_data, load_matrix, LoadOptions, Loaded, Precision, ToySpec};

fn describe(loaded: &Loaded) -> String {
    match loaded {
        Loaded::Features(t) => format!("{} rows x {} features", t.n_rows(), t.n_features()),
        Loaded::Matrix(m) => format!("{0} x {0} distance matrix", m.n()),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let opts = LoadOptions::default();

    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let spec = ToySpec { points_per_cluster: 10, noise_points: 10, ..ToySpec::default() };
            let p = dir.path().join("points.csv");
            std::fs::write(&p, features_csv(&generate_toy(&spec)?.0))?;
            p
        }
    };
    let loaded = load_data(&path, &opts)?;
    println!("{}: {}", path.display(), describe(&loaded));

    let m = loaded.into_matrix(true, Precision::F32)?;
    let csv = dir.path().join("matrix.csv");
    write_matrix_csv(&m, &csv)?;
    println!("{}: {}", csv.display(), describe(&load_data(&csv, &opts)?));

    let bin = dir.path().join("matrix.bin");
    save_matrix(&m, &bin)?;
    assert_eq!(load_matrix(&bin)?, m);
    println!("binary round trip of {} elements is exact", m.n());
    Ok(())
}
