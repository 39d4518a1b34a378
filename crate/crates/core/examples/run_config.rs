//! Runs a bundled experiment config through the library and lists the
//! artifacts, as `pgx run` would.
//!
//! ```text
//! cargo run --release --example run_config -- configs/corridor_fig4b.toml /tmp/pgx-out
//! ```

use std::path::PathBuf;

use pgx::experiment::{load_config, run_config, RunOptions};

fn main() -> pgx::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/corridor_fig4b.toml"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pgx-run-config"));
    let experiment = load_config(&config)?;
    let options = RunOptions {
        out: Some(out),
        ..Default::default()
    };
    let summary = run_config(experiment, &options)?;
    println!("{} -> {}", summary.manifest.name, summary.out_dir.display());
    for f in &summary.manifest.files {
        println!("  {:<24} {:>8} bytes  {}", f.path, f.bytes, &f.sha256[..16]);
    }
    Ok(())
}
