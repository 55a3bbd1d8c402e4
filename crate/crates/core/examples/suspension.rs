//! Dense-leaf verdicts for the suspensions of the full shift and of a Cantor
//! homeomorphism whose orbits all drift to one end.
//!
//! ```sh
//! cargo run --example suspension
//! ```

use lattes_da::lamination::{
    de_bruijn_seed, endpoint_seeds, indecomposability_verdict, CantorSystem,
};

fn main() -> lattes_da::Result<()> {
    let depth = 6;
    let shift = CantorSystem::shift();
    let seed = de_bruijn_seed(&shift.alphabet, depth);
    println!(
        "shift: {}",
        indecomposability_verdict(&shift, depth, 2 << depth, &[seed], None)?
    );

    let h = CantorSystem::h();
    let seeds = endpoint_seeds(&h.alphabet, 8);
    println!(
        "h:     {}",
        indecomposability_verdict(&h, depth, 10_000, &seeds, Some(8))?
    );
    Ok(())
}
