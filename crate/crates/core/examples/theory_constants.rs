//! The a-priori constants `C`, `C~` and `K` as functions of time, for unit
//! norms and for the norms of the confinement initial data.

use std::path::PathBuf;

use annulus_vm::config::parse_config;
use annulus_vm::potential::{NormBundle, TheoryConstants};
use annulus_vm::simulation::setup_from_config;

fn table(label: &str, tc: &TheoryConstants) {
    println!("{label}");
    println!("{:>6} {:>14} {:>14} {:>14}", "t", "C", "C~", "K");
    for k in 0..=8 {
        let t = 0.5 * k as f64;
        let s = tc.snapshot(t);
        println!("{t:>6.2} {:>14.6e} {:>14.6e} {:>14.6e}", s.c, s.c_tilde, s.k);
    }
    println!();
}

fn main() -> annulus_vm::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/confinement.toml");
    let cfg = parse_config(&std::fs::read_to_string(path)?)?;
    let setup = setup_from_config(&cfg, false)?;
    let annulus = cfg.annulus_spec();
    table("unit norms", &TheoryConstants::new(annulus, NormBundle::unit()));
    table("ring initial data", &TheoryConstants::new(annulus, NormBundle::from_initial(&setup.init)));
    Ok(())
}
