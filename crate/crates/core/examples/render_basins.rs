//! Renders the two basins and the repeller between them as a PPM image.
//!
//! ```sh
//! cargo run --release --example render_basins -- 512 basins.ppm
//! ```

use lattes_da::repeller::{compute_basins, render_ppm, Palette};
use lattes_da::surgery::PerturbedMap;

fn main() -> lattes_da::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(256);
    let path = args.next().unwrap_or_else(|| "basins.ppm".into());
    let p = PerturbedMap::lattes_default();
    let grid = compute_basins(&p, size, size, 5000, 1e-3)?;
    render_ppm(&grid, &Palette::default(), &path)?;
    let c = grid.counts();
    println!(
        "B1 {} B2 {} K_candidate {} undecided {}",
        c.b1, c.b2, c.k_candidate, c.undecided
    );
    println!("symmetric agreement {:.6}", grid.symmetric_agreement());
    println!("wrote {path}");
    Ok(())
}
