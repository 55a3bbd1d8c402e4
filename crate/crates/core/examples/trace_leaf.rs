//! Grows the unstable and stable leaves through a saddle and measures how
//! densely each fills the repeller.
//!
//! ```sh
//! cargo run --release --example trace_leaf -- 200
//! ```

use lattes_da::leaf::{density_statistic, trace_leaf, LeafKind, TraceOptions};
use lattes_da::repeller::{compute_basins, k_candidate_points};
use lattes_da::surgery::PerturbedMap;

fn main() -> lattes_da::Result<()> {
    let length: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(50.0);
    let p = PerturbedMap::lattes_default();
    let saddle = p.find_saddles()?.saddles[0].lift;
    let grid = compute_basins(&p, 256, 256, 5000, 1e-3)?;
    let kset = k_candidate_points(&grid);
    for kind in [LeafKind::Unstable, LeafKind::Stable] {
        let trace = trace_leaf(&p, saddle, kind, length, &TraceOptions::default())?;
        println!(
            "{} leaf: {} vertices after {} generations, arc length {:.2}, density at 0.05: {:.4}",
            kind.as_str(),
            trace.points.len(),
            trace.generations,
            trace.arc_length(),
            density_statistic(&trace, &kset, 0.05)
        );
    }
    Ok(())
}
