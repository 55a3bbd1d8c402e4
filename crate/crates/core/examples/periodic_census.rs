//! Number of fixed points of `fⁿ` on the sphere and the growth rate `(1/n) log Nₙ`.
//!
//! ```sh
//! cargo run --example periodic_census -- 8
//! ```

use lattes_da::lattice::IntMatrix2;
use lattes_da::pillowcase::{periodic_census, PeriodicCensus};

fn main() -> lattes_da::Result<()> {
    let n_max: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(6);
    let m = IntMatrix2::lattes_example();
    println!("{}", PeriodicCensus::CSV_HEADER);
    for n in 1..=n_max {
        println!("{}", periodic_census(&m, n)?.csv_row());
    }
    println!("# log 2 = {}", 2f64.ln());
    Ok(())
}
