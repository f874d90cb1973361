//! Energy bookkeeping of a confined run: total energy, integrated wall flux
//! and the balance gap.

use annulus_vm::config::parse_config;
use annulus_vm::simulation::{setup_from_config, Simulation};

const CONFIG: &str = r#"
[annulus]
r1 = 1.0
r2 = 3.0
delta0 = 0.5
delta = 0.25

[grid]
nr = 64
np = 33
p_max = 0.8
allow_undersized_box = true

[time]
t_end = 2.0

[initial]
center_r = 2.0
width_r = 0.1
temperature = 0.1
amplitude = 1.0
m0 = 0.3

[potential]
kind = "explicit-csc"

[boundary.inner]
kind = "sinusoid"
amplitude = 0.05
omega = 2.0
"#;

fn main() -> annulus_vm::Result<()> {
    let cfg = parse_config(CONFIG)?;
    let mut sim = Simulation::new(setup_from_config(&cfg, false)?)?;
    sim.run()?;
    let h = sim.energy_history();
    let e0 = h.energy[0];
    println!("{:>8} {:>14} {:>14} {:>12}", "t", "energy", "flux accum", "gap / E0");
    let every = (h.len() / 16).max(1);
    for k in (0..h.len()).step_by(every) {
        println!("{:>8.4} {:>14.8e} {:>14.6e} {:>12.3e}", h.times[k], h.energy[k], h.flux_accum[k], h.gap(k) / e0);
    }
    println!("max gap / E0     {:.3e}", h.max_gap() / e0);
    println!("max identity res {:.3e}", sim.stats().max_identity_residual);
    Ok(())
}
