//! Loads a TOML configuration and writes its CSV and summary.
//!
//! `cargo run --release --example run_config -- configs/zero_speed.toml /tmp/out`

use std::path::PathBuf;

use bubblelab::experiments::{run_experiment, ExperimentConfig};

fn main() -> bubblelab::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/zero_speed.toml".into()));
    let cfg = ExperimentConfig::load(&path)?;
    cfg.validate()?;
    let out = run_experiment(&cfg)?;
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| cfg.output_dir.clone());
    let (csv, json) = out.write(&dir)?;
    println!("{} -> {}, {} (pass: {})", path.display(), csv.display(), json.display(), out.summary.pass);
    Ok(())
}
