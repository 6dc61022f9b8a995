//! Writes a small synthetic catalog: `cargo run --example write_fixture -- DIR`.

use std::path::PathBuf;

use instmix_core::synth::{write_fixture, FixtureSpec};

fn main() -> std::io::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixture".into())
        .into();
    let mut spec = FixtureSpec::uniform(3, 24);
    spec.held_in = 2;
    spec.mmlu_tasks = 2;
    let manifest = write_fixture(&dir, &spec)?;
    println!("{}", manifest.display());
    Ok(())
}
