//! Exact combinatorics of the Lattès map induced by a matrix.
//!
//! ```sh
//! cargo run --example verify_lattes -- 3,1,1,1
//! ```

use lattes_da::lattice::IntMatrix2;
use lattes_da::pillowcase::verify_lattes;

fn main() -> lattes_da::Result<()> {
    let m: IntMatrix2 = match std::env::args().nth(1) {
        Some(s) => s.parse()?,
        None => IntMatrix2::lattes_example(),
    };
    let report = verify_lattes(&m)?;
    print!("{report}");
    println!("all checks pass: {}", report.all_pass());
    Ok(())
}
