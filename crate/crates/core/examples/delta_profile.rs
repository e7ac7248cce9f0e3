//! Traces the diagonal stencil statistic along an ordering and writes it as CSV. Peaks
//! mark boundaries between blocks; flat low stretches are cluster interiors.

use chainclust::export::delta_csv;
use chainclust::{compute_delta_profile, DistanceMatrix, Precision, Stencil};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // three blocks of 8 with tight interiors
    let m = DistanceMatrix::from_upper(24, Precision::F64, |i, j| if i / 8 == j / 8 { 1.0 } else { 6.0 })?;
    let profile = compute_delta_profile(&m, Stencil::with_half_width(2, m.n())?)?;
    for (position, value) in profile.iter() {
        println!("{position:>3} {value:>6.2} {}", "#".repeat((value * 2.0) as usize));
    }
    println!("integral {:.2}", profile.integral());
    print!("{}", delta_csv(&profile));
    Ok(())
}
