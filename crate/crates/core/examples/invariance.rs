//! Tests the sampled repeller for complete invariance, and shows that an
//! attractor fails the same test.
//!
//! ```sh
//! cargo run --release --example invariance -- 256
//! ```

use lattes_da::pillowcase::SpherePointF;
use lattes_da::repeller::{compute_basins, invariance_check, k_candidate_points};
use lattes_da::surgery::PerturbedMap;

fn main() -> lattes_da::Result<()> {
    let size: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(256);
    let p = PerturbedMap::lattes_default();
    let grid = compute_basins(&p, size, size, 5000, 1e-3)?;
    let kset = k_candidate_points(&grid);
    let eps = 2.0 / size as f64;
    let report = invariance_check(&kset, &p, eps, 1000, 42)?;
    println!(
        "K sample of {} points, eps {eps}: forward {:.3}, backward {:.3}, passes: {}",
        kset.len(),
        report.forward_rate(),
        report.backward_rate(),
        report.passes(0.99)
    );
    let attractor = [SpherePointF::new(0.0, 0.0)];
    let control = invariance_check(&attractor, &p, eps, 1, 42)?;
    println!(
        "attractor alone: forward {:.3}, backward {:.3}, passes: {}",
        control.forward_rate(),
        control.backward_rate(),
        control.passes(0.99)
    );
    Ok(())
}
