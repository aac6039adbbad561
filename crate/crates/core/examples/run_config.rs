//! Drive a study from a configuration file, as the `run` subcommand does.
//!
//! `cargo run --release --example run_config -- configs/polygon.toml`

use ldg_control::cli::{execute, output_root, RunConfig};

fn main() -> ldg_control::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/manufactured.toml".into());
    let config = RunConfig::from_path(&path)?;
    let out = execute(&config, output_root())?;
    for row in &out.study.report.rows {
        println!("{:6} {:?}", row.elements, row.columns());
    }
    for f in out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
