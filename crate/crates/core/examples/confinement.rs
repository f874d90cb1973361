//! Self-consistent run inside the explicit confining potential, reporting
//! the distance of the support from the walls and every a-priori margin.

use std::path::PathBuf;

use annulus_vm::config::parse_config;
use annulus_vm::simulation::{setup_from_config, Simulation};

fn main() -> annulus_vm::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/confinement.toml"));
    let cfg = parse_config(&std::fs::read_to_string(&path)?)?;
    let mut sim = Simulation::new(setup_from_config(&cfg, false)?)?;
    let every = (sim.n_steps() / 16).max(1);
    println!("{:>8} {:>10} {:>14} {:>12}", "t", "distance", "charge", "min margin");
    sim.run_with(|_, rec| {
        if rec.step % every == 0 {
            println!(
                "{:>8.4} {:>10.4} {:>14.8e} {:>12.4e}",
                rec.time,
                rec.measured.distance,
                rec.total_charge,
                rec.margins.min()
            );
        }
        Ok(())
    })?;
    let s = sim.stats();
    println!();
    println!("delta            {}", sim.grid().annulus.delta);
    println!("min distance     {:.4}", s.min_distance);
    println!("leaks            {}", s.leaks);
    println!("momentum clips   {}", s.momentum_clips);
    println!("max step drift   {:.3e}", s.max_step_drift);
    println!("smallest margin  {:.4e}", s.min_margin);
    if !s.violated.is_empty() {
        println!("violated         {}", s.violated.join(", "));
    }
    Ok(())
}
