//! Field-free transport of a Gaussian ring, compared against the exact
//! straight-line pushforward.
//!
//! ```text
//! cargo run --release --example free_streaming [config.toml]
//! ```

use std::path::PathBuf;

use annulus_vm::config::parse_config;
use annulus_vm::io::run_to_dir;

fn main() -> annulus_vm::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/free_streaming.toml"));
    let cfg = parse_config(&std::fs::read_to_string(&path)?)?;
    let dir = PathBuf::from(&cfg.output.dir);
    let report = run_to_dir(&cfg, &dir, false)?;
    println!("steps            {}", report.stats.steps);
    println!("final time       {:.6}", report.final_time);
    if let Some(o) = &report.oracle {
        println!("max |f - exact|  {:.3e}", o.max_abs_error);
        println!("relative error   {:.3e}", o.relative());
    }
    println!("artifacts in {}", dir.display());
    Ok(())
}
