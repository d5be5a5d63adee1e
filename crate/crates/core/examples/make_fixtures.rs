//! Writes the synthetic World Bank corpus: one CSV per indicator.
//!
//! cargo run -p datl --example make_fixtures -- [out_dir] [seed]

use std::path::PathBuf;

use datl::synthetic::{worldbank_fixture, FIXTURE_SEED};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/worldbank")
    });
    let seed = args
        .next()
        .and_then(|s| s.parse().ok())
        .unwrap_or(FIXTURE_SEED);
    std::fs::create_dir_all(&dir)?;
    for (channel, text) in worldbank_fixture(seed) {
        let path = dir.join(format!("{}.csv", channel.name()));
        std::fs::write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(())
}
