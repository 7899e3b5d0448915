//! Writes the bundled scenarios as JSON: `cargo run --example gen_scenarios -- [DIR]`.

use std::path::PathBuf;

use viewplan::scenarios::{bundled, ANALOGS};
use viewplan::scene::save_scenario;

fn main() -> viewplan::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("scenarios"));
    std::fs::create_dir_all(&dir).map_err(|e| viewplan::Error::io(&dir, e))?;
    for name in ANALOGS.iter().chain(["tiny"].iter()) {
        let path = dir.join(format!("{name}.json"));
        save_scenario(&bundled(name)?, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}
