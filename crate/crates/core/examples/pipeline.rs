//! The full run with a pass/fail line per check. Accepts the same
//! `key=value` pairs as a config file, e.g.
//!
//! ```sh
//! cargo run --release --example pipeline -- size=256x256 out=pipeline-out
//! ```

use std::collections::BTreeMap;

use lattes_da::config::{parse_config_text, RunConfig};
use lattes_da::pipeline::run_pipeline;

fn main() -> lattes_da::Result<()> {
    let text = std::env::args().skip(1).collect::<Vec<_>>().join("\n");
    let mut entries: BTreeMap<String, String> = parse_config_text(&text)?;
    entries
        .entry("out".into())
        .or_insert_with(|| "pipeline-out".into());
    let outcome = run_pipeline(&RunConfig::from_entries(&entries)?)?;
    print!("{}", outcome.summary);
    std::process::exit(if outcome.passed() { 0 } else { 1 });
}
