//! Characteristics in vacuum and in the static external field, with the
//! conserved quantities of each.

use annulus_vm::domain::AnnulusSpec;
use annulus_vm::potential::{ExternalPotential, NormBundle, PotentialSpec, TheoryConstants};
use annulus_vm::vlasov::{trace_particle, CharState, StaticExternalSampler, TraceOptions, VacuumSampler};

fn main() -> annulus_vm::Result<()> {
    let opts = TraceOptions::with_dt(1e-3);
    let ic = CharState::new(1.6, 0.3, 0.55);

    let vacuum = VacuumSampler { r1: 1.0, r2: 3.0 };
    let tr = trace_particle(ic, &vacuum, 0.0, 1.5, opts)?;
    println!("vacuum");
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "t", "r", "p_r", "p_theta", "r p_theta");
    for (t, s) in tr.times.iter().zip(&tr.states).step_by(250) {
        println!("{t:>6.3} {:>10.6} {:>10.6} {:>10.6} {:>10.6}", s.r, s.pr, s.pt, s.r * s.pt);
    }

    let annulus = AnnulusSpec::new(1.0, 3.0, 0.5, 0.25)?;
    let spec = PotentialSpec::explicit_csc(annulus);
    let ext = ExternalPotential::new(spec, TheoryConstants::new(annulus, NormBundle::unit()));
    let frozen = ext.at(0.0);
    let sampler = StaticExternalSampler {
        potential: frozen.clone(),
    };
    let ic = CharState::new(1.5, -0.6, 0.3);
    let tr = trace_particle(ic, &sampler, 0.0, 3.0, opts)?;
    let canonical = |s: &CharState| s.r * (s.pt + frozen.psi_ext(s.r).unwrap_or(f64::NAN));
    println!();
    println!("static external field");
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>12}", "t", "r", "p_r", "p_theta", "|p|", "r(p_th+psi)");
    for (t, s) in tr.times.iter().zip(&tr.states).step_by(250) {
        println!(
            "{t:>6.3} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>12.8}",
            s.r,
            s.pr,
            s.pt,
            s.p_abs(),
            canonical(s)
        );
    }
    match tr.contact {
        Some(c) => println!("wall contact at t = {:.4}", c.t),
        None => println!("no wall contact; inner turning radius {:.4}", tr.states.iter().map(|s| s.r).fold(f64::INFINITY, f64::min)),
    }
    Ok(())
}
