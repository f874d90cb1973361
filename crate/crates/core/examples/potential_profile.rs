//! The confining potential: base profile, moving bar, truncated profile and
//! the resulting external field at a few times.

use annulus_vm::domain::AnnulusSpec;
use annulus_vm::potential::{moving_bar, psi_base_eval, ExternalPotential, NormBundle, PotentialSpec, TheoryConstants};

fn main() -> annulus_vm::Result<()> {
    let annulus = AnnulusSpec::new(1.0, 3.0, 0.5, 0.25)?;
    let spec = PotentialSpec::explicit_csc(annulus);
    let tc = TheoryConstants::new(annulus, NormBundle::unit());
    let ext = ExternalPotential::new(spec.clone(), tc.clone());
    for t in [0.0, 1.0, 4.0] {
        let bar = moving_bar(&spec, &tc, t);
        let p = ext.at(t);
        println!("t = {t}, L_bar = {bar:.4}");
        println!("{:>8} {:>12} {:>12} {:>12}", "r", "psi_base", "psi_ext", "B_ext");
        for i in 1..20 {
            let r = 1.0 + 2.0 * i as f64 / 20.0;
            println!(
                "{r:>8.3} {:>12.5} {:>12.5} {:>12.5}",
                psi_base_eval(&spec, r)?,
                p.psi_ext(r)?,
                p.b_ext(r)?
            );
        }
        println!();
    }
    Ok(())
}
