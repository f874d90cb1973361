//! Vacuum fields driven through the inner wall, compared with the
//! closed-form reflection sum for `P+(t, r1)`.

use annulus_vm::config::parse_config;
use annulus_vm::maxwell::boundary_recursion_check;
use annulus_vm::simulation::{setup_from_config, Simulation};

const CONFIG: &str = r#"
[annulus]
r1 = 1.0
r2 = 3.0
delta0 = 0.5
delta = 0.25

[grid]
nr = 256
np = 9
p_max = 1.0
allow_undersized_box = true

[time]
t_end = 5.0

[initial]
kind = "zero"

[boundary.inner]
kind = "sinusoid"
amplitude = 0.5
omega = 3.0
phase = -1.5707963267948966
offset = 0.5

[boundary.outer]
kind = "constant"
value = 0.0
"#;

fn main() -> annulus_vm::Result<()> {
    let cfg = parse_config(CONFIG)?;
    let mut setup = setup_from_config(&cfg, false)?;
    setup.options.record_field_history = true;
    let mut sim = Simulation::new(setup)?;
    sim.run()?;
    let h = sim.field_history().expect("history recorded");
    println!("{:>8} {:>4} {:>14} {:>14} {:>10}", "t", "M", "solver", "reflections", "gap");
    for k in 1..=10 {
        let t = 0.5 * k as f64;
        let c = boundary_recursion_check(h, t)?;
        println!(
            "{:>8.3} {:>4} {:>14.6e} {:>14.6e} {:>10.2e}",
            c.t, c.reflections, c.solver, c.reconstructed, c.gap
        );
    }
    Ok(())
}
