//! Attractors and saddles of the perturbed map for a given radius and multiplier.
//!
//! ```sh
//! cargo run --example surgery_report -- 0.2 0.5
//! ```

use lattes_da::lattice::IntMatrix2;
use lattes_da::surgery::{PerturbedMap, SurgeryProfile, SurgeryReport};

fn main() -> lattes_da::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>());
    let r = args
        .next()
        .and_then(Result::ok)
        .unwrap_or(SurgeryProfile::DEFAULT_R);
    let mu = args
        .next()
        .and_then(Result::ok)
        .unwrap_or(SurgeryProfile::DEFAULT_MU);
    let p = PerturbedMap::new(IntMatrix2::lattes_example(), SurgeryProfile::new(r, mu)?)?;
    let report = p.find_saddles()?;
    println!(
        "saddle offset u* = {:.12} (u*/r = {:.6})",
        report.offset,
        report.offset / r
    );
    println!("{}", SurgeryReport::CSV_HEADER);
    for row in report.csv_rows() {
        println!("{row}");
    }
    println!(
        "equivariance defect over 10^4 points: {:.2e}",
        p.equivariance_defect(10_000, 42)
    );
    Ok(())
}
